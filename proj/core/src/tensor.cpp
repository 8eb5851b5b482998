#include "vcnet/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "vcnet/rng.hpp"

namespace vcnet::nn {

namespace {

using detail::Node;
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;

std::shared_ptr<Node> new_node(const Shape& s) {
    auto n = std::make_shared<Node>();
    n->shape = s;
    n->value.assign(static_cast<std::size_t>(s.numel()), 0.0);
    return n;
}

bool any_requires_grad(const std::vector<Tensor>& ts) {
    for (const auto& t : ts)
        if (t.defined() && t.requires_grad()) return true;
    return false;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!(a.shape() == b.shape()))
        throw Error(std::string("nn.") + op,
                    "shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

} // namespace

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
    auto n = new_node(s);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::full(const Shape& s, double v, bool requires_grad) {
    auto n = new_node(s);
    std::fill(n->value.begin(), n->value.end(), v);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::from_data(const Shape& s, std::vector<double> data, bool requires_grad) {
    if (static_cast<long>(data.size()) != s.numel())
        throw Error("nn.from_data", "data size does not match shape " + s.str());
    auto n = std::make_shared<Node>();
    n->shape = s;
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from_data(Shape{1, 1, 1, 1}, {v}); }

double Tensor::item() const {
    if (numel() != 1) throw Error("nn.item", "tensor is not scalar: " + shape().str());
    return node_->value[0];
}

Tensor Tensor::detached() const {
    auto n = std::make_shared<Node>();
    n->shape = node_->shape;
    n->value = node_->value;
    n->requires_grad = false;
    return Tensor(std::move(n));
}

void Tensor::backward() const {
    if (!node_) throw Error("nn.backward", "undefined tensor");
    if (numel() != 1) throw Error("nn.backward", "backward requires a scalar root");
    if (!node_->requires_grad) throw Error("nn.backward", "root does not require grad");

    // Iterative post-order DFS for a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [nd, idx] = stack.back();
        if (idx < nd->parents.size()) {
            Node* p = nd->parents[idx++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(nd);
            stack.pop_back();
        }
    }

    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* nd = *it;
        if (nd->backward_fn) nd->backward_fn(*nd);
    }
}

Tensor make_op(const Shape& shape, std::vector<double> value, std::vector<Tensor> parents,
               std::function<void(detail::Node&)> backward) {
    if (static_cast<long>(value.size()) != shape.numel())
        throw Error("nn.make_op", "value size does not match shape");
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value = std::move(value);
    n->requires_grad = any_requires_grad(parents);
    if (n->requires_grad) {
        for (auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(backward);
    }
    return Tensor::wrap(std::move(n));
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> v(a.value().begin(), a.value().end());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += b.value()[i];
    auto pa = a.node(), pb = b.node();
    return make_op(a.shape(), std::move(v), {a, b}, [pa, pb](Node& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> v(a.value().begin(), a.value().end());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= b.value()[i];
    auto pa = a.node(), pb = b.node();
    return make_op(a.shape(), std::move(v), {a, b}, [pa, pb](Node& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pa->grad[i] += self.grad[i] * pb->value[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pb->grad[i] += self.grad[i] * pa->value[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> v(a.value().begin(), a.value().end());
    for (double& x : v) x *= s;
    auto pa = a.node();
    return make_op(a.shape(), std::move(v), {a}, [pa, s](Node& self) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * s;
    });
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double x : a.value()) s += x;
    auto pa = a.node();
    return make_op(Shape{1, 1, 1, 1}, {s}, {a}, [pa](Node& self) {
        pa->ensure_grad();
        const double g = self.grad[0];
        for (double& gi : pa->grad) gi += g;
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> v(x.value().begin(), x.value().end());
    for (double& e : v) e = e > 0.0 ? e : 0.0;
    auto px = x.node();
    return make_op(x.shape(), std::move(v), {x}, [px](Node& self) {
        px->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (px->value[i] > 0.0) px->grad[i] += self.grad[i];
    });
}

Tensor gelu(const Tensor& x) {
    // Exact GELU: x * Phi(x).
    std::vector<double> v(x.value().begin(), x.value().end());
    for (double& e : v) e = e * 0.5 * (1.0 + std::erf(e / std::numbers::sqrt2));
    auto px = x.node();
    return make_op(x.shape(), std::move(v), {x}, [px](Node& self) {
        px->ensure_grad();
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double z = px->value[i];
            const double phi = 0.5 * (1.0 + std::erf(z / std::numbers::sqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * z * z);
            px->grad[i] += self.grad[i] * (phi + z * pdf);
        }
    });
}

Tensor dropout(const Tensor& x, double p, Mode mode, std::uint64_t seed) {
    if (p < 0.0 || p >= 1.0) throw Error("nn.dropout", "p must lie in [0,1)");
    if (mode == Mode::Eval || p == 0.0) {
        // identity node keeps the graph uniform
        auto px = x.node();
        std::vector<double> v(x.value().begin(), x.value().end());
        return make_op(x.shape(), std::move(v), {x}, [px](Node& self) {
            px->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
        });
    }
    Rng rng(derive_seed(seed, "dropout"));
    auto keep = std::make_shared<std::vector<std::uint8_t>>(x.value().size());
    const double inv_keep = 1.0 / (1.0 - p);
    std::vector<double> v(x.value().begin(), x.value().end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        (*keep)[i] = rng.uniform() >= p ? 1 : 0;
        v[i] = (*keep)[i] ? v[i] * inv_keep : 0.0;
    }
    auto px = x.node();
    return make_op(x.shape(), std::move(v), {x}, [px, keep, inv_keep](Node& self) {
        px->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if ((*keep)[i]) px->grad[i] += self.grad[i] * inv_keep;
    });
}

namespace {

struct ConvDims {
    int n, cin, h, w;
    int cout, kh, kw;
    int ho, wo;
    int stride, pad, dil, groups;
    int cin_g, cout_g, k; // per-group channel counts; k = cin_g*kh*kw
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad, int dil, int groups) {
    ConvDims d;
    d.n = x.shape().n;
    d.cin = x.shape().c;
    d.h = x.shape().h;
    d.w = x.shape().w;
    d.cout = w.shape().n;
    d.kh = w.shape().h;
    d.kw = w.shape().w;
    d.stride = stride;
    d.pad = pad;
    d.dil = dil;
    d.groups = groups;
    if (d.cin % groups != 0 || d.cout % groups != 0)
        throw Error("nn.conv2d", "channels not divisible by groups");
    if (w.shape().c != d.cin / groups)
        throw Error("nn.conv2d", "weight expects " + std::to_string(w.shape().c * groups) +
                                     " input channels, got " + std::to_string(d.cin));
    d.cin_g = d.cin / groups;
    d.cout_g = d.cout / groups;
    d.k = d.cin_g * d.kh * d.kw;
    d.ho = (d.h + 2 * pad - dil * (d.kh - 1) - 1) / stride + 1;
    d.wo = (d.w + 2 * pad - dil * (d.kw - 1) - 1) / stride + 1;
    if (d.ho <= 0 || d.wo <= 0) throw Error("nn.conv2d", "output dims degenerate");
    return d;
}

// Gathers x[n,g] into a (k x ho*wo) column matrix.
void im2col(const double* x, const ConvDims& d, int n, int g, double* col) {
    const int p = d.ho * d.wo;
    for (int cg = 0; cg < d.cin_g; ++cg) {
        const double* src = x + (static_cast<std::size_t>(n) * d.cin + g * d.cin_g + cg) *
                                    static_cast<std::size_t>(d.h) * d.w;
        for (int ky = 0; ky < d.kh; ++ky)
            for (int kx = 0; kx < d.kw; ++kx) {
                double* dst = col + (static_cast<std::size_t>(cg) * d.kh * d.kw + ky * d.kw + kx) *
                                        static_cast<std::size_t>(p);
                for (int oy = 0; oy < d.ho; ++oy) {
                    const int iy = oy * d.stride - d.pad + ky * d.dil;
                    if (iy < 0 || iy >= d.h) {
                        std::fill(dst, dst + d.wo, 0.0);
                        dst += d.wo;
                        continue;
                    }
                    for (int ox = 0; ox < d.wo; ++ox) {
                        const int ix = ox * d.stride - d.pad + kx * d.dil;
                        *dst++ = (ix < 0 || ix >= d.w) ? 0.0 : src[static_cast<std::size_t>(iy) * d.w + ix];
                    }
                }
            }
    }
}

// Scatters a (k x ho*wo) column-gradient matrix back into dx[n,g].
void col2im(const double* col, const ConvDims& d, int n, int g, double* dx) {
    const int p = d.ho * d.wo;
    for (int cg = 0; cg < d.cin_g; ++cg) {
        double* dst = dx + (static_cast<std::size_t>(n) * d.cin + g * d.cin_g + cg) *
                              static_cast<std::size_t>(d.h) * d.w;
        for (int ky = 0; ky < d.kh; ++ky)
            for (int kx = 0; kx < d.kw; ++kx) {
                const double* src = col + (static_cast<std::size_t>(cg) * d.kh * d.kw + ky * d.kw + kx) *
                                              static_cast<std::size_t>(p);
                for (int oy = 0; oy < d.ho; ++oy) {
                    const int iy = oy * d.stride - d.pad + ky * d.dil;
                    if (iy < 0 || iy >= d.h) {
                        src += d.wo;
                        continue;
                    }
                    for (int ox = 0; ox < d.wo; ++ox) {
                        const int ix = ox * d.stride - d.pad + kx * d.dil;
                        if (ix >= 0 && ix < d.w) dst[static_cast<std::size_t>(iy) * d.w + ix] += src[ox];
                    }
                    src += d.wo;
                }
            }
    }
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int padding,
              int dilation, int groups) {
    const ConvDims d = conv_dims(x, weight, stride, padding, dilation, groups);
    const bool pointwise =
        d.kh == 1 && d.kw == 1 && d.stride == 1 && d.pad == 0 && d.dil == 1;
    const int p = d.ho * d.wo;

    Shape out_shape{d.n, d.cout, d.ho, d.wo};
    std::vector<double> out(static_cast<std::size_t>(out_shape.numel()), 0.0);
    std::vector<double> col;
    if (!pointwise) col.resize(static_cast<std::size_t>(d.k) * p);

    for (int n = 0; n < d.n; ++n)
        for (int g = 0; g < d.groups; ++g) {
            const double* colp;
            if (pointwise) {
                colp = x.value().data() + (static_cast<std::size_t>(n) * d.cin + g * d.cin_g) *
                                              static_cast<std::size_t>(d.h) * d.w;
            } else {
                im2col(x.value().data(), d, n, g, col.data());
                colp = col.data();
            }
            MapCM W(weight.value().data() + static_cast<std::size_t>(g) * d.cout_g * d.k, d.cout_g,
                    d.k);
            MapCM C(colp, d.k, p);
            MapM O(out.data() + (static_cast<std::size_t>(n) * d.cout + g * d.cout_g) *
                                    static_cast<std::size_t>(p),
                   d.cout_g, p);
            O.noalias() = W * C;
        }
    if (bias.defined()) {
        if (bias.numel() != d.cout) throw Error("nn.conv2d", "bias size mismatch");
        for (int n = 0; n < d.n; ++n)
            for (int c = 0; c < d.cout; ++c) {
                double* o = out.data() +
                            (static_cast<std::size_t>(n) * d.cout + c) * static_cast<std::size_t>(p);
                const double b = bias.value()[c];
                for (int i = 0; i < p; ++i) o[i] += b;
            }
    }

    auto px = x.node();
    auto pw = weight.node();
    auto pb = bias.defined() ? bias.node() : nullptr;
    std::vector<Tensor> parents{x, weight};
    if (bias.defined()) parents.push_back(bias);

    return make_op(out_shape, std::move(out), std::move(parents),
                   [px, pw, pb, d, pointwise, p](Node& self) {
                       std::vector<double> col, dcol;
                       if (!pointwise) col.resize(static_cast<std::size_t>(d.k) * p);
                       if (px->requires_grad) {
                           px->ensure_grad();
                           dcol.resize(static_cast<std::size_t>(d.k) * p);
                       }
                       if (pw->requires_grad) pw->ensure_grad();
                       if (pb && pb->requires_grad) pb->ensure_grad();

                       for (int n = 0; n < d.n; ++n)
                           for (int g = 0; g < d.groups; ++g) {
                               MapCM dY(self.grad.data() +
                                            (static_cast<std::size_t>(n) * d.cout + g * d.cout_g) *
                                                static_cast<std::size_t>(p),
                                        d.cout_g, p);
                               if (pw->requires_grad) {
                                   const double* colp;
                                   if (pointwise) {
                                       colp = px->value.data() +
                                              (static_cast<std::size_t>(n) * d.cin + g * d.cin_g) *
                                                  static_cast<std::size_t>(d.h) * d.w;
                                   } else {
                                       im2col(px->value.data(), d, n, g, col.data());
                                       colp = col.data();
                                   }
                                   MapCM C(colp, d.k, p);
                                   MapM dW(pw->grad.data() + static_cast<std::size_t>(g) * d.cout_g * d.k,
                                           d.cout_g, d.k);
                                   dW.noalias() += dY * C.transpose();
                               }
                               if (px->requires_grad) {
                                   MapCM W(pw->value.data() + static_cast<std::size_t>(g) * d.cout_g * d.k,
                                           d.cout_g, d.k);
                                   if (pointwise) {
                                       MapM dX(px->grad.data() +
                                                   (static_cast<std::size_t>(n) * d.cin + g * d.cin_g) *
                                                       static_cast<std::size_t>(d.h) * d.w,
                                               d.k, p);
                                       dX.noalias() += W.transpose() * dY;
                                   } else {
                                       MapM dC(dcol.data(), d.k, p);
                                       dC.noalias() = W.transpose() * dY;
                                       col2im(dcol.data(), d, n, g, px->grad.data());
                                   }
                               }
                           }
                       if (pb && pb->requires_grad) {
                           for (int n = 0; n < d.n; ++n)
                               for (int c = 0; c < d.cout; ++c) {
                                   const double* gy = self.grad.data() +
                                                      (static_cast<std::size_t>(n) * d.cout + c) *
                                                          static_cast<std::size_t>(p);
                                   double s = 0.0;
                                   for (int i = 0; i < p; ++i) s += gy[i];
                                   pb->grad[c] += s;
                               }
                       }
                   });
}

Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   std::vector<double>& running_mean, std::vector<double>& running_var, Mode mode,
                   double momentum, double eps) {
    const Shape s = x.shape();
    const int C = s.c;
    const long m = static_cast<long>(s.n) * s.h * s.w; // elements per channel
    if (gamma.numel() != C || beta.numel() != C)
        throw Error("nn.batchnorm2d", "gamma/beta size mismatch");
    if (static_cast<int>(running_mean.size()) != C || static_cast<int>(running_var.size()) != C)
        throw Error("nn.batchnorm2d", "running stats size mismatch");

    const long hw = static_cast<long>(s.h) * s.w;
    auto mean = std::make_shared<std::vector<double>>(C, 0.0);
    auto invstd = std::make_shared<std::vector<double>>(C, 0.0);

    if (mode == Mode::Train) {
        for (int c = 0; c < C; ++c) {
            double mu = 0.0;
            for (int n = 0; n < s.n; ++n) {
                const double* p = x.value().data() + (static_cast<std::size_t>(n) * C + c) * hw;
                for (long i = 0; i < hw; ++i) mu += p[i];
            }
            mu /= static_cast<double>(m);
            double var = 0.0;
            for (int n = 0; n < s.n; ++n) {
                const double* p = x.value().data() + (static_cast<std::size_t>(n) * C + c) * hw;
                for (long i = 0; i < hw; ++i) {
                    const double dd = p[i] - mu;
                    var += dd * dd;
                }
            }
            var /= static_cast<double>(m); // biased, used for normalization
            (*mean)[c] = mu;
            (*invstd)[c] = 1.0 / std::sqrt(var + eps);
            const double var_unbiased = m > 1 ? var * static_cast<double>(m) / (m - 1) : var;
            running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mu;
            running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var_unbiased;
        }
    } else {
        for (int c = 0; c < C; ++c) {
            (*mean)[c] = running_mean[c];
            (*invstd)[c] = 1.0 / std::sqrt(running_var[c] + eps);
        }
    }

    std::vector<double> out(x.value().size());
    auto xhat = std::make_shared<std::vector<double>>(x.value().size());
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < C; ++c) {
            const double* p = x.value().data() + (static_cast<std::size_t>(n) * C + c) * hw;
            double* o = out.data() + (static_cast<std::size_t>(n) * C + c) * hw;
            double* xh = xhat->data() + (static_cast<std::size_t>(n) * C + c) * hw;
            const double g = gamma.value()[c], b = beta.value()[c];
            for (long i = 0; i < hw; ++i) {
                xh[i] = (p[i] - (*mean)[c]) * (*invstd)[c];
                o[i] = g * xh[i] + b;
            }
        }

    auto px = x.node();
    auto pg = gamma.node();
    auto pbx = beta.node();
    const bool train = mode == Mode::Train;
    return make_op(s, std::move(out), {x, gamma, beta},
                   [px, pg, pbx, xhat, invstd, s, C, hw, m, train](Node& self) {
                       std::vector<double> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
                       for (int n = 0; n < s.n; ++n)
                           for (int c = 0; c < C; ++c) {
                               const double* gy = self.grad.data() +
                                                  (static_cast<std::size_t>(n) * C + c) * hw;
                               const double* xh = xhat->data() +
                                                  (static_cast<std::size_t>(n) * C + c) * hw;
                               double a = 0.0, b2 = 0.0;
                               for (long i = 0; i < hw; ++i) {
                                   a += gy[i];
                                   b2 += gy[i] * xh[i];
                               }
                               sum_dy[c] += a;
                               sum_dy_xhat[c] += b2;
                           }
                       if (pbx->requires_grad) {
                           pbx->ensure_grad();
                           for (int c = 0; c < C; ++c) pbx->grad[c] += sum_dy[c];
                       }
                       if (pg->requires_grad) {
                           pg->ensure_grad();
                           for (int c = 0; c < C; ++c) pg->grad[c] += sum_dy_xhat[c];
                       }
                       if (px->requires_grad) {
                           px->ensure_grad();
                           for (int n = 0; n < s.n; ++n)
                               for (int c = 0; c < C; ++c) {
                                   const double* gy = self.grad.data() +
                                                      (static_cast<std::size_t>(n) * C + c) * hw;
                                   const double* xh = xhat->data() +
                                                      (static_cast<std::size_t>(n) * C + c) * hw;
                                   double* gx = px->grad.data() +
                                                (static_cast<std::size_t>(n) * C + c) * hw;
                                   const double gscale = pg->value[c] * (*invstd)[c];
                                   if (train) {
                                       const double mdy = sum_dy[c] / static_cast<double>(m);
                                       const double mdyx = sum_dy_xhat[c] / static_cast<double>(m);
                                       for (long i = 0; i < hw; ++i)
                                           gx[i] += gscale * (gy[i] - mdy - xh[i] * mdyx);
                                   } else {
                                       for (long i = 0; i < hw; ++i) gx[i] += gscale * gy[i];
                                   }
                               }
                       }
                   });
}

Tensor upsample_bilinear(const Tensor& x, int factor) {
    if (factor < 1) throw Error("nn.upsample_bilinear", "factor must be >= 1");
    const Shape s = x.shape();
    const int oh = s.h * factor, ow = s.w * factor;
    Shape os{s.n, s.c, oh, ow};
    std::vector<double> out(static_cast<std::size_t>(os.numel()));

    // Precompute source indices/weights per output coordinate (half-pixel centers).
    std::vector<int> y0(oh), y1(oh);
    std::vector<double> ty(oh);
    for (int y = 0; y < oh; ++y) {
        double fy = (y + 0.5) / factor - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(s.h - 1));
        y0[y] = static_cast<int>(fy);
        y1[y] = std::min(y0[y] + 1, s.h - 1);
        ty[y] = fy - y0[y];
    }
    std::vector<int> x0(ow), x1(ow);
    std::vector<double> tx(ow);
    for (int x2 = 0; x2 < ow; ++x2) {
        double fx = (x2 + 0.5) / factor - 0.5;
        fx = std::min(std::max(fx, 0.0), static_cast<double>(s.w - 1));
        x0[x2] = static_cast<int>(fx);
        x1[x2] = std::min(x0[x2] + 1, s.w - 1);
        tx[x2] = fx - x0[x2];
    }

    const long ihw = static_cast<long>(s.h) * s.w;
    const long ohw = static_cast<long>(oh) * ow;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const double* src = x.value().data() + (static_cast<std::size_t>(n) * s.c + c) * ihw;
            double* dst = out.data() + (static_cast<std::size_t>(n) * s.c + c) * ohw;
            for (int y = 0; y < oh; ++y)
                for (int x2 = 0; x2 < ow; ++x2) {
                    const double a = src[static_cast<std::size_t>(y0[y]) * s.w + x0[x2]];
                    const double b = src[static_cast<std::size_t>(y0[y]) * s.w + x1[x2]];
                    const double cc = src[static_cast<std::size_t>(y1[y]) * s.w + x0[x2]];
                    const double dd = src[static_cast<std::size_t>(y1[y]) * s.w + x1[x2]];
                    dst[static_cast<std::size_t>(y) * ow + x2] =
                        (a * (1 - tx[x2]) + b * tx[x2]) * (1 - ty[y]) +
                        (cc * (1 - tx[x2]) + dd * tx[x2]) * ty[y];
                }
        }

    auto px = x.node();
    return make_op(os, std::move(out), {x},
                   [px, s, oh, ow, ihw, ohw, y0, y1, ty, x0, x1, tx](Node& self) {
                       px->ensure_grad();
                       for (int n = 0; n < s.n; ++n)
                           for (int c = 0; c < s.c; ++c) {
                               double* gx = px->grad.data() +
                                            (static_cast<std::size_t>(n) * s.c + c) * ihw;
                               const double* gy = self.grad.data() +
                                                  (static_cast<std::size_t>(n) * s.c + c) * ohw;
                               for (int y = 0; y < oh; ++y)
                                   for (int x2 = 0; x2 < ow; ++x2) {
                                       const double g = gy[static_cast<std::size_t>(y) * ow + x2];
                                       gx[static_cast<std::size_t>(y0[y]) * s.w + x0[x2]] +=
                                           g * (1 - tx[x2]) * (1 - ty[y]);
                                       gx[static_cast<std::size_t>(y0[y]) * s.w + x1[x2]] +=
                                           g * tx[x2] * (1 - ty[y]);
                                       gx[static_cast<std::size_t>(y1[y]) * s.w + x0[x2]] +=
                                           g * (1 - tx[x2]) * ty[y];
                                       gx[static_cast<std::size_t>(y1[y]) * s.w + x1[x2]] +=
                                           g * tx[x2] * ty[y];
                                   }
                           }
                   });
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw Error("nn.concat_channels", "empty input list");
    const Shape s0 = xs[0].shape();
    int ctotal = 0;
    for (const auto& t : xs) {
        if (t.shape().n != s0.n || t.shape().h != s0.h || t.shape().w != s0.w)
            throw Error("nn.concat_channels", "spatial/batch dims differ");
        ctotal += t.shape().c;
    }
    Shape os{s0.n, ctotal, s0.h, s0.w};
    const long hw = static_cast<long>(s0.h) * s0.w;
    std::vector<double> out(static_cast<std::size_t>(os.numel()));
    for (int n = 0; n < s0.n; ++n) {
        long coff = 0;
        for (const auto& t : xs) {
            const int ci = t.shape().c;
            std::copy_n(t.value().data() + static_cast<std::size_t>(n) * ci * hw, ci * hw,
                        out.data() + (static_cast<std::size_t>(n) * ctotal + coff) * hw);
            coff += ci;
        }
    }
    std::vector<std::shared_ptr<Node>> pnodes;
    for (const auto& t : xs) pnodes.push_back(t.node());
    return make_op(os, std::move(out), xs, [pnodes, s0, ctotal, hw](Node& self) {
        for (int n = 0; n < s0.n; ++n) {
            long coff = 0;
            for (auto& p : pnodes) {
                const int ci = p->shape.c;
                if (p->requires_grad) {
                    p->ensure_grad();
                    const double* g = self.grad.data() +
                                      (static_cast<std::size_t>(n) * ctotal + coff) * hw;
                    double* pg = p->grad.data() + static_cast<std::size_t>(n) * ci * hw;
                    for (long i = 0; i < ci * hw; ++i) pg[i] += g[i];
                }
                coff += ci;
            }
        }
    });
}

Tensor global_avg_pool(const Tensor& x) {
    const Shape s = x.shape();
    const long hw = static_cast<long>(s.h) * s.w;
    Shape os{s.n, s.c, 1, 1};
    std::vector<double> out(static_cast<std::size_t>(os.numel()));
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const double* p = x.value().data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
            double m = 0.0;
            for (long i = 0; i < hw; ++i) m += p[i];
            out[static_cast<std::size_t>(n) * s.c + c] = m / static_cast<double>(hw);
        }
    auto px = x.node();
    return make_op(os, std::move(out), {x}, [px, s, hw](Node& self) {
        px->ensure_grad();
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const double g = self.grad[static_cast<std::size_t>(n) * s.c + c] /
                                 static_cast<double>(hw);
                double* gx = px->grad.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
                for (long i = 0; i < hw; ++i) gx[i] += g;
            }
    });
}

Tensor broadcast_hw(const Tensor& x, int h, int w) {
    const Shape s = x.shape();
    if (s.h != 1 || s.w != 1) throw Error("nn.broadcast_hw", "input spatial dims must be 1x1");
    Shape os{s.n, s.c, h, w};
    const long hw = static_cast<long>(h) * w;
    std::vector<double> out(static_cast<std::size_t>(os.numel()));
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const double v = x.value()[static_cast<std::size_t>(n) * s.c + c];
            double* dst = out.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
            std::fill(dst, dst + hw, v);
        }
    auto px = x.node();
    return make_op(os, std::move(out), {x}, [px, s, hw](Node& self) {
        px->ensure_grad();
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const double* g = self.grad.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
                double sum = 0.0;
                for (long i = 0; i < hw; ++i) sum += g[i];
                px->grad[static_cast<std::size_t>(n) * s.c + c] += sum;
            }
    });
}

Tensor l2_normalize_channels(const Tensor& x, double eps) {
    const Shape s = x.shape();
    const long hw = static_cast<long>(s.h) * s.w;
    std::vector<double> out(x.value().size());
    auto norms = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.n) * hw);
    for (int n = 0; n < s.n; ++n)
        for (long i = 0; i < hw; ++i) {
            double q = 0.0;
            for (int c = 0; c < s.c; ++c) {
                const double v = x.value()[(static_cast<std::size_t>(n) * s.c + c) * hw + i];
                q += v * v;
            }
            const double norm = std::max(std::sqrt(q), eps);
            (*norms)[static_cast<std::size_t>(n) * hw + i] = norm;
            for (int c = 0; c < s.c; ++c)
                out[(static_cast<std::size_t>(n) * s.c + c) * hw + i] =
                    x.value()[(static_cast<std::size_t>(n) * s.c + c) * hw + i] / norm;
        }
    auto px = x.node();
    return make_op(s, std::move(out), {x}, [px, s, hw, norms](Node& self) {
        px->ensure_grad();
        for (int n = 0; n < s.n; ++n)
            for (long i = 0; i < hw; ++i) {
                const double norm = (*norms)[static_cast<std::size_t>(n) * hw + i];
                double dot = 0.0;
                for (int c = 0; c < s.c; ++c) {
                    const std::size_t idx = (static_cast<std::size_t>(n) * s.c + c) * hw + i;
                    dot += self.grad[idx] * self.value[idx];
                }
                for (int c = 0; c < s.c; ++c) {
                    const std::size_t idx = (static_cast<std::size_t>(n) * s.c + c) * hw + i;
                    px->grad[idx] += (self.grad[idx] - self.value[idx] * dot) / norm;
                }
            }
    });
}

Tensor softmax_channels(const Tensor& x) {
    const Shape s = x.shape();
    const long hw = static_cast<long>(s.h) * s.w;
    std::vector<double> out(x.value().size());
    for (int n = 0; n < s.n; ++n)
        for (long i = 0; i < hw; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < s.c; ++c)
                mx = std::max(mx, x.value()[(static_cast<std::size_t>(n) * s.c + c) * hw + i]);
            double z = 0.0;
            for (int c = 0; c < s.c; ++c) {
                const std::size_t idx = (static_cast<std::size_t>(n) * s.c + c) * hw + i;
                out[idx] = std::exp(x.value()[idx] - mx);
                z += out[idx];
            }
            for (int c = 0; c < s.c; ++c) out[(static_cast<std::size_t>(n) * s.c + c) * hw + i] /= z;
        }
    auto px = x.node();
    return make_op(s, std::move(out), {x}, [px, s, hw](Node& self) {
        px->ensure_grad();
        for (int n = 0; n < s.n; ++n)
            for (long i = 0; i < hw; ++i) {
                double dot = 0.0;
                for (int c = 0; c < s.c; ++c) {
                    const std::size_t idx = (static_cast<std::size_t>(n) * s.c + c) * hw + i;
                    dot += self.grad[idx] * self.value[idx];
                }
                for (int c = 0; c < s.c; ++c) {
                    const std::size_t idx = (static_cast<std::size_t>(n) * s.c + c) * hw + i;
                    px->grad[idx] += self.value[idx] * (self.grad[idx] - dot);
                }
            }
    });
}

} // namespace vcnet::nn
