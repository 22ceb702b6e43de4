#pragma once

#include <string>

#include "fgd/autodiff.hpp"
#include "fgd/params.hpp"
#include "fgd/rng.hpp"
#include "fgd/tensor.hpp"

namespace fgd::nn {

// Standard gated recurrent unit:
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wh + (r . h) Uh + bh)
//   h' = z . h + (1 - z) . c
struct GruCell {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Tensor wz, uz, bz;  // w*: [input,hidden], u*: [hidden,hidden], b*: [hidden]
    Tensor wr, ur, br;
    Tensor wh, uh, bh;

    static GruCell init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
};

Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev);

// Parameter-store plumbing. Names are "<prefix>.wz" etc.
void gru_put(ParamStore& store, const std::string& prefix, const GruCell& cell);
GruCell gru_get(const ParamStore& store, const std::string& prefix);

struct GruVarIds {
    int wz, uz, bz, wr, ur, br, wh, uh, bh;
    std::size_t hidden_dim;
};

GruVarIds gru_vars(const std::map<std::string, int>& ids, const std::string& prefix,
                   const Tape& tape);
int gru_tape_step(Tape& tape, const GruVarIds& v, int x, int h_prev);

}  // namespace fgd::nn
