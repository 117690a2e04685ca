#ifndef HGNN_HARNESS_HPP
#define HGNN_HARNESS_HPP

#include <string>
#include <vector>

#include "hgnn/embedding.hpp"
#include "hgnn/synthetic.hpp"
#include "hgnn/training.hpp"

namespace hgnn {

struct EmbedConfig {
    enum class Pipeline { flat, hierarchical };
    Pipeline pipeline = Pipeline::flat;
    std::size_t rank = 4;                  // flat rank, or layer-0 rank when hierarchical
    std::vector<std::size_t> level_ranks;  // per hidden level, finest first
    InterLayerScheme scheme = InterLayerScheme::Additive;
    double fixed_sigma = 1.0;
    std::uint64_t seed = 0;
    std::vector<Partition> partitions;  // preset hierarchy; inferred when empty
};

struct EmbedOutcome {
    EmbeddingResult embedding;
    double nmse = 0.0;
    double effective_dim = 0.0;
    std::vector<Partition> partitions;
};

EmbedOutcome run_embed_pipeline(const Graph& g, const EmbedConfig& cfg);

struct CompareVariant {
    std::string name;
    EmbedConfig config;
};

struct CompareRecord {
    std::string name;
    std::vector<double> nmses;     // per replica, replica order
    std::vector<double> eff_dims;  // per replica
    double nmse_min = 0.0, nmse_median = 0.0, nmse_max = 0.0;
    double eff_dim_median = 0.0;
    double wall_time_ms = 0.0;
};

// Runs every variant on R shared seeded replicas of the synthetic spec,
// so per-replica NMSE differences are paired statistics.
std::vector<CompareRecord> run_compare(const SyntheticSpec& spec,
                                       const std::vector<CompareVariant>& variants,
                                       std::size_t replicas, std::uint64_t seed);

struct SoftCommunityOptions {
    std::size_t groups = 2;
    std::size_t iterations = 2;
    std::size_t steps = 300;
    double learning_rate = 0.5;
    std::uint64_t seed = 0;
};

struct SoftCommunityResult {
    Partition partition;  // hardened by per-row argmax, lowest index wins ties
    double q = 0.0;       // modularity of the hardened partition
    TrainReport report;
};

// Recurrent HGNN with a sigmoid head trained by gradient ascent on soft
// modularity, then hardened.
SoftCommunityResult train_soft_communities(const Graph& g, const SoftCommunityOptions& opt);

double median(std::vector<double> values);

}  // namespace hgnn

#endif
