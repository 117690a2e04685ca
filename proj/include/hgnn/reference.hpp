#ifndef HGNN_REFERENCE_HPP
#define HGNN_REFERENCE_HPP

#include "hgnn/propagation.hpp"

namespace hgnn::reference {

// Serial reference implementation of one propagation step: dense,
// per-node loops written independently of the CSR kernels. Used by the
// test suites as an oracle and by the benchmark as the serial baseline.
FeatureState hgnn_step_serial(const FeatureState& state, const PreparedStack& ps,
                              const std::vector<ActivationParams>& params);

// Serial reference of the pairwise squared-error sum with a plain
// dot-product mu, accumulated left to right.
double squared_error_serial(const Graph& g, const Matrix& l, const Matrix& r,
                            const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

}  // namespace hgnn::reference

#endif
