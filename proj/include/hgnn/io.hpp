#ifndef HGNN_IO_HPP
#define HGNN_IO_HPP

#include <string>
#include <vector>

#include "hgnn/embedding.hpp"
#include "hgnn/hierarchy.hpp"
#include "hgnn/propagation.hpp"
#include "hgnn/training.hpp"

namespace hgnn {

// Partition JSON: {"nodes": [...], "assignments": [[[group, prob], ...], ...]}.
// Discrete partitions are written in the short form {"nodes": [...],
// "groups": [...]}; both forms are accepted on read.
void write_partition_file(const Partition& p, const std::vector<std::string>& node_ids,
                          const std::string& path);
Partition read_partition_file(const std::string& path, std::vector<std::string>* node_ids = nullptr);

// Embedding TSV: node label, l-vector, r-vector per row, plus a JSON
// metadata sidecar (dimension, model kind, effective dimensionality).
void write_embedding_files(const EmbeddingResult& e, const std::vector<std::string>& node_ids,
                           double effective_dim, const std::string& tsv_path,
                           const std::string& meta_path);
EmbeddingResult read_embedding_file(const std::string& tsv_path,
                                    std::vector<std::string>* node_ids = nullptr);

// Layer-tagged feature TSV: layer, node label, feature vector.
void write_feature_state(const FeatureState& state, const LayerStack& stack,
                         const std::string& path);

// Checkpoint JSON: every parameter block, config echo, seed, trace.
void write_checkpoint(const ModelParams& params, const PropagationConfig& cfg,
                      const TrainConfig& tcfg, const TrainReport& report,
                      const std::string& path, bool include_timing);

std::string format_number(double v);

// FNV-1a hash of a canonical string, for config fingerprints in reports.
std::uint64_t fnv1a(const std::string& s);

}  // namespace hgnn

#endif
