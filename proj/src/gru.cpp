#include "fgd/gru.hpp"

#include <cmath>
#include <stdexcept>

namespace fgd::nn {

GruCell GruCell::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    GruCell c;
    c.input_dim = input_dim;
    c.hidden_dim = hidden_dim;
    auto w = [&] { return Tensor::uniform_init({input_dim, hidden_dim}, input_dim, rng); };
    auto u = [&] { return Tensor::uniform_init({hidden_dim, hidden_dim}, hidden_dim, rng); };
    auto b = [&] { return Tensor::uniform_init({hidden_dim}, hidden_dim, rng); };
    c.wz = w(); c.uz = u(); c.bz = b();
    c.wr = w(); c.ur = u(); c.br = b();
    c.wh = w(); c.uh = u(); c.bh = b();
    return c;
}

Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev) {
    if (x.rank() != 1 || x.shape[0] != cell.input_dim)
        throw std::invalid_argument("gru_step: input dim mismatch");
    if (h_prev.rank() != 1 || h_prev.shape[0] != cell.hidden_dim)
        throw std::invalid_argument("gru_step: hidden dim mismatch");

    std::size_t h = cell.hidden_dim;
    Tensor z = matvec(cell.wz, x);
    Tensor zr = matvec(cell.uz, h_prev);
    Tensor r = matvec(cell.wr, x);
    Tensor rr = matvec(cell.ur, h_prev);
    for (std::size_t i = 0; i < h; ++i) {
        z.data[i] = 1.0 / (1.0 + std::exp(-(z.data[i] + zr.data[i] + cell.bz.data[i])));
        r.data[i] = 1.0 / (1.0 + std::exp(-(r.data[i] + rr.data[i] + cell.br.data[i])));
    }
    Tensor rh = h_prev;
    for (std::size_t i = 0; i < h; ++i) rh.data[i] *= r.data[i];
    Tensor c = matvec(cell.wh, x);
    Tensor ch = matvec(cell.uh, rh);
    Tensor out = Tensor::zeros({h});
    for (std::size_t i = 0; i < h; ++i) {
        double cand = std::tanh(c.data[i] + ch.data[i] + cell.bh.data[i]);
        out.data[i] = z.data[i] * h_prev.data[i] + (1.0 - z.data[i]) * cand;
    }
    return out;
}

void gru_put(ParamStore& store, const std::string& prefix, const GruCell& cell) {
    store.put(prefix + ".wz", cell.wz);
    store.put(prefix + ".uz", cell.uz);
    store.put(prefix + ".bz", cell.bz);
    store.put(prefix + ".wr", cell.wr);
    store.put(prefix + ".ur", cell.ur);
    store.put(prefix + ".br", cell.br);
    store.put(prefix + ".wh", cell.wh);
    store.put(prefix + ".uh", cell.uh);
    store.put(prefix + ".bh", cell.bh);
}

GruCell gru_get(const ParamStore& store, const std::string& prefix) {
    GruCell c;
    c.wz = store.at(prefix + ".wz");
    c.uz = store.at(prefix + ".uz");
    c.bz = store.at(prefix + ".bz");
    c.wr = store.at(prefix + ".wr");
    c.ur = store.at(prefix + ".ur");
    c.br = store.at(prefix + ".br");
    c.wh = store.at(prefix + ".wh");
    c.uh = store.at(prefix + ".uh");
    c.bh = store.at(prefix + ".bh");
    c.input_dim = c.wz.shape[0];
    c.hidden_dim = c.wz.shape[1];
    return c;
}

GruVarIds gru_vars(const std::map<std::string, int>& ids, const std::string& prefix,
                   const Tape& tape) {
    GruVarIds v{};
    v.wz = ids.at(prefix + ".wz");
    v.uz = ids.at(prefix + ".uz");
    v.bz = ids.at(prefix + ".bz");
    v.wr = ids.at(prefix + ".wr");
    v.ur = ids.at(prefix + ".ur");
    v.br = ids.at(prefix + ".br");
    v.wh = ids.at(prefix + ".wh");
    v.uh = ids.at(prefix + ".uh");
    v.bh = ids.at(prefix + ".bh");
    v.hidden_dim = tape.val(v.uz).shape[0];
    return v;
}

int gru_tape_step(Tape& t, const GruVarIds& v, int x, int h_prev) {
    int z = t.sigmoid(t.add(t.add(t.matvec_op(v.wz, x), t.matvec_op(v.uz, h_prev)), v.bz));
    int r = t.sigmoid(t.add(t.add(t.matvec_op(v.wr, x), t.matvec_op(v.ur, h_prev)), v.br));
    int rh = t.mul(r, h_prev);
    int c = t.tanh_op(t.add(t.add(t.matvec_op(v.wh, x), t.matvec_op(v.uh, rh)), v.bh));
    return t.add(t.mul(z, h_prev), t.mul(t.affine(z, -1.0, 1.0), c));
}

}  // namespace fgd::nn
