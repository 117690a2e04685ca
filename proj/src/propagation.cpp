#include "hgnn/propagation.hpp"

namespace hgnn {

ActivationParams identity_activation(std::size_t d, std::size_t d_down, std::size_t d_up) {
    ActivationParams p;
    p.w_self = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) p.w_self(i, i) = 1.0;
    p.w_nbr = Matrix(d, d);
    if (d_down > 0) p.w_down = Matrix(d_down, d);
    if (d_up > 0) p.w_up = Matrix(d_up, d);
    p.bias.assign(d, 0.0);
    p.phi = Nonlinearity::identity;
    return p;
}

}  // namespace hgnn
