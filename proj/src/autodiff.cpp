#include "fgd/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "fgd/params.hpp"

namespace fgd::nn {

namespace {
double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// loss = softplus(x) - y*x, numerically stable for large |x|
double bce_from_logit(double x, double y) {
    return std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
}
}  // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Tensor value, bool param) {
    Node n;
    n.op = Op::kLeaf;
    n.ilabel = param ? 1 : 0;
    n.value = std::move(value);
    return push(std::move(n));
}

int Tape::matvec_op(int w, int x) {
    Node n;
    n.op = Op::kMatVec;
    n.a = w;
    n.b = x;
    n.value = matvec(val(w), val(x));
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    if (!val(a).same_shape(val(b))) throw std::invalid_argument("Tape::add: shape mismatch");
    Node n;
    n.op = Op::kAdd;
    n.a = a;
    n.b = b;
    n.value = val(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] += val(b).data[i];
    return push(std::move(n));
}

int Tape::mul(int a, int b) {
    if (!val(a).same_shape(val(b))) throw std::invalid_argument("Tape::mul: shape mismatch");
    Node n;
    n.op = Op::kMul;
    n.a = a;
    n.b = b;
    n.value = val(a);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] *= val(b).data[i];
    return push(std::move(n));
}

int Tape::affine(int a, double scale, double shift) {
    Node n;
    n.op = Op::kAffine;
    n.a = a;
    n.c0 = scale;
    n.c1 = shift;
    n.value = val(a);
    for (double& v : n.value.data) v = scale * v + shift;
    return push(std::move(n));
}

int Tape::sigmoid(int a) {
    Node n;
    n.op = Op::kSigmoid;
    n.a = a;
    n.value = val(a);
    for (double& v : n.value.data) v = sigmoid_scalar(v);
    return push(std::move(n));
}

int Tape::tanh_op(int a) {
    Node n;
    n.op = Op::kTanh;
    n.a = a;
    n.value = val(a);
    for (double& v : n.value.data) v = std::tanh(v);
    return push(std::move(n));
}

int Tape::concat(int a, int b) {
    Node n;
    n.op = Op::kConcat;
    n.a = a;
    n.b = b;
    n.value = Tensor::zeros({val(a).size() + val(b).size()});
    std::size_t k = 0;
    for (double v : val(a).data) n.value.data[k++] = v;
    for (double v : val(b).data) n.value.data[k++] = v;
    return push(std::move(n));
}

int Tape::max2(int a, int b) {
    if (!val(a).same_shape(val(b))) throw std::invalid_argument("Tape::max2: shape mismatch");
    Node n;
    n.op = Op::kMax2;
    n.a = a;
    n.b = b;
    n.value = val(a);
    for (std::size_t i = 0; i < n.value.size(); ++i)
        n.value.data[i] = std::max(val(a).data[i], val(b).data[i]);
    return push(std::move(n));
}

int Tape::sum(int a) {
    Node n;
    n.op = Op::kSum;
    n.a = a;
    double s = 0.0;
    for (double v : val(a).data) s += v;
    n.value = Tensor::scalar(s);
    return push(std::move(n));
}

int Tape::trigram_mean(int taps, int bias, Tensor m0, Tensor m1, Tensor m2) {
    if (val(taps).size() != 3) throw std::invalid_argument("trigram_mean: taps must have size 3");
    if (!val(bias).same_shape(m0)) throw std::invalid_argument("trigram_mean: bias/mean mismatch");
    Node n;
    n.op = Op::kTrigramMean;
    n.a = taps;
    n.b = bias;
    const Tensor& t = val(taps);
    n.value = val(bias);
    for (std::size_t d = 0; d < n.value.size(); ++d)
        n.value.data[d] += t.data[0] * m0.data[d] + t.data[1] * m1.data[d] + t.data[2] * m2.data[d];
    n.aux0 = std::move(m0);
    n.aux1 = std::move(m1);
    n.aux2 = std::move(m2);
    return push(std::move(n));
}

int Tape::cross_entropy_loss(int logits, std::size_t label, double weight) {
    if (label >= val(logits).size())
        throw std::invalid_argument("cross_entropy_loss: label out of range");
    Node n;
    n.op = Op::kCrossEntropy;
    n.a = logits;
    n.ilabel = label;
    n.c1 = weight;
    n.aux0 = softmax(val(logits));
    n.value = Tensor::scalar(weight * cross_entropy(val(logits), label));
    return push(std::move(n));
}

int Tape::bce_logit_loss(int logit, double target, double weight) {
    if (val(logit).size() != 1) throw std::invalid_argument("bce_logit_loss: logit must be scalar");
    Node n;
    n.op = Op::kBceLogit;
    n.a = logit;
    n.c0 = target;
    n.c1 = weight;
    n.value = Tensor::scalar(weight * bce_from_logit(val(logit).data[0], target));
    return push(std::move(n));
}

void Tape::backward(int loss_id) {
    if (val(loss_id).size() != 1) throw std::invalid_argument("Tape::backward: loss must be scalar");
    for (Node& n : nodes_) {
        n.grad = Tensor::zeros(n.value.shape);
    }
    nodes_[static_cast<std::size_t>(loss_id)].grad.data[0] = 1.0;

    for (int id = loss_id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::kLeaf:
                break;
            case Op::kMatVec: {
                Tensor& gw = nodes_[static_cast<std::size_t>(n.a)].grad;
                Tensor& gx = nodes_[static_cast<std::size_t>(n.b)].grad;
                const Tensor& w = val(n.a);
                const Tensor& x = val(n.b);
                std::size_t k = w.shape[0], m = w.shape[1];
                for (std::size_t i = 0; i < k; ++i) {
                    double xi = x.data[i];
                    const double* wrow = w.data.data() + i * m;
                    double* gwrow = gw.data.data() + i * m;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        gwrow[j] += xi * g.data[j];
                        acc += wrow[j] * g.data[j];
                    }
                    gx.data[i] += acc;
                }
                break;
            }
            case Op::kAdd: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                Tensor& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga.data[i] += g.data[i];
                    gb.data[i] += g.data[i];
                }
                break;
            }
            case Op::kMul: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                Tensor& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
                const Tensor& a = val(n.a);
                const Tensor& b = val(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga.data[i] += b.data[i] * g.data[i];
                    gb.data[i] += a.data[i] * g.data[i];
                }
                break;
            }
            case Op::kAffine: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += n.c0 * g.data[i];
                break;
            }
            case Op::kSigmoid: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double s = n.value.data[i];
                    ga.data[i] += s * (1.0 - s) * g.data[i];
                }
                break;
            }
            case Op::kTanh: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double t = n.value.data[i];
                    ga.data[i] += (1.0 - t * t) * g.data[i];
                }
                break;
            }
            case Op::kConcat: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                Tensor& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
                std::size_t na = ga.size();
                for (std::size_t i = 0; i < na; ++i) ga.data[i] += g.data[i];
                for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += g.data[na + i];
                break;
            }
            case Op::kMax2: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                Tensor& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
                const Tensor& a = val(n.a);
                const Tensor& b = val(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (a.data[i] >= b.data[i])
                        ga.data[i] += g.data[i];
                    else
                        gb.data[i] += g.data[i];
                }
                break;
            }
            case Op::kSum: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                for (double& v : ga.data) v += g.data[0];
                break;
            }
            case Op::kTrigramMean: {
                Tensor& gt = nodes_[static_cast<std::size_t>(n.a)].grad;
                Tensor& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
                for (std::size_t d = 0; d < g.size(); ++d) {
                    gt.data[0] += n.aux0.data[d] * g.data[d];
                    gt.data[1] += n.aux1.data[d] * g.data[d];
                    gt.data[2] += n.aux2.data[d] * g.data[d];
                    gb.data[d] += g.data[d];
                }
                break;
            }
            case Op::kCrossEntropy: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                double go = g.data[0] * n.c1;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    double p = n.aux0.data[i];
                    ga.data[i] += go * (p - (i == n.ilabel ? 1.0 : 0.0));
                }
                break;
            }
            case Op::kBceLogit: {
                Tensor& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
                double s = sigmoid_scalar(val(n.a).data[0]);
                ga.data[0] += g.data[0] * n.c1 * (s - n.c0);
                break;
            }
        }
    }
}

std::map<std::string, int> register_params(Tape& tape, const ParamStore& params) {
    std::map<std::string, int> ids;
    for (const auto& [name, tensor] : params) ids[name] = tape.leaf(tensor, true);
    return ids;
}

std::map<std::string, Tensor> collect_grads(const Tape& tape,
                                            const std::map<std::string, int>& ids) {
    std::map<std::string, Tensor> grads;
    for (const auto& [name, id] : ids) grads[name] = tape.grad(id);
    return grads;
}

}  // namespace fgd::nn
