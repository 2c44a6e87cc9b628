#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seqreg/corpus.hpp"
#include "seqreg/error.hpp"
#include "seqreg/matrix.hpp"
#include "seqreg/rng.hpp"
#include "seqreg/static_reorder.hpp"

namespace seqreg {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct GatHead {
    Matrix W;              // head_dim x dim
    std::vector<double> a; // 2 * head_dim attention vector
};

struct RegulatorParams {
    std::size_t dim = 0;
    std::size_t layers = 2;
    std::size_t heads = 8;
    double leaky_slope = 0.05;
    double dropout_rate = 0.4; // applied to attention weights, training mode only
    std::vector<std::vector<GatHead>> gat; // [layer][head]
    std::vector<double> w_s;               // scoring projection, length dim

    std::size_t head_dim() const { return dim / heads; }
};

inline void validate_params(const RegulatorParams& p) {
    if (p.dim == 0 || p.heads == 0 || p.layers == 0)
        raise(ErrorCategory::Input, "params: dim, layers and heads must be positive");
    if (p.dim % p.heads != 0)
        raise(ErrorCategory::Input, "params: dim must be divisible by heads");
    if (p.dropout_rate < 0.0 || p.dropout_rate >= 1.0)
        raise(ErrorCategory::Input, "params: dropout_rate must be in [0, 1)");
    const std::size_t hd = p.head_dim();
    if (p.gat.size() != p.layers) raise(ErrorCategory::Dimension, "params: layer count mismatch");
    for (const auto& layer : p.gat) {
        if (layer.size() != p.heads) raise(ErrorCategory::Dimension, "params: head count mismatch");
        for (const auto& head : layer) {
            if (head.W.rows() != hd || head.W.cols() != p.dim)
                raise(ErrorCategory::Dimension, "params: W must be (dim/heads) x dim");
            if (head.a.size() != 2 * hd)
                raise(ErrorCategory::Dimension, "params: attention vector must have 2*dim/heads entries");
            if (!head.W.all_finite())
                raise(ErrorCategory::Numeric, "params: non-finite W entry");
            for (double v : head.a)
                if (!std::isfinite(v)) raise(ErrorCategory::Numeric, "params: non-finite a entry");
        }
    }
    if (p.w_s.size() != p.dim)
        raise(ErrorCategory::Dimension, "params: w_s must have dim entries");
    for (double v : p.w_s)
        if (!std::isfinite(v)) raise(ErrorCategory::Numeric, "params: non-finite w_s entry");
}

inline RegulatorParams init_params(std::size_t dim, std::size_t layers, std::size_t heads,
                                   SplitMix64& rng, double leaky_slope = 0.05,
                                   double dropout_rate = 0.4) {
    RegulatorParams p;
    p.dim = dim;
    p.layers = layers;
    p.heads = heads;
    p.leaky_slope = leaky_slope;
    p.dropout_rate = dropout_rate;
    if (dim == 0 || heads == 0 || dim % heads != 0)
        raise(ErrorCategory::Input, "init_params: dim must be a positive multiple of heads");
    const std::size_t hd = dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    p.gat.resize(layers);
    for (auto& layer : p.gat) {
        layer.resize(heads);
        for (auto& head : layer) {
            head.W = Matrix(hd, dim);
            for (double& v : head.W.data()) v = rng.uniform(-scale, scale);
            head.a.resize(2 * hd);
            for (double& v : head.a) v = rng.uniform(-scale, scale);
        }
    }
    p.w_s.resize(dim);
    for (double& v : p.w_s) v = rng.uniform(-scale, scale);
    return p;
}

// Stable enumeration of every trainable entry: per layer, per head, W
// row-major then a; finally w_s. Finite-difference checks and the gradient
// step both walk this order.
inline std::vector<double*> param_entries(RegulatorParams& p) {
    std::vector<double*> out;
    for (auto& layer : p.gat)
        for (auto& head : layer) {
            for (double& v : head.W.data()) out.push_back(&v);
            for (double& v : head.a) out.push_back(&v);
        }
    for (double& v : p.w_s) out.push_back(&v);
    return out;
}

struct ParamGrads {
    std::vector<std::vector<GatHead>> gat;
    std::vector<double> w_s;
};

inline ParamGrads zero_grads(const RegulatorParams& p) {
    ParamGrads g;
    g.gat.resize(p.layers);
    const std::size_t hd = p.head_dim();
    for (auto& layer : g.gat) {
        layer.resize(p.heads);
        for (auto& head : layer) {
            head.W = Matrix(hd, p.dim);
            head.a.assign(2 * hd, 0.0);
        }
    }
    g.w_s.assign(p.dim, 0.0);
    return g;
}

inline std::vector<double*> grad_entries(ParamGrads& g) {
    std::vector<double*> out;
    for (auto& layer : g.gat)
        for (auto& head : layer) {
            for (double& v : head.W.data()) out.push_back(&v);
            for (double& v : head.a) out.push_back(&v);
        }
    for (double& v : g.w_s) out.push_back(&v);
    return out;
}

// ---------------------------------------------------------------------------
// Syntax encoder: multi-head graph attention over the dependency tree
// ---------------------------------------------------------------------------

// Per-head intermediates kept for the backward pass.
struct HeadCache {
    Matrix U;                                    // n x head_dim, U_j = W g_j
    std::vector<std::vector<double>> pre;        // LeakyReLU inputs per i over N_i
    std::vector<std::vector<double>> alpha;      // softmax output per i over N_i
    std::vector<std::vector<double>> alpha_used; // after dropout scaling
};

struct LayerCache {
    Matrix input;
    std::vector<HeadCache> heads;
};

struct GatCache {
    std::vector<std::vector<std::size_t>> nbr; // children + self, ascending
    std::vector<LayerCache> layers;
};

// Forward pass. Neighborhood of i is its children under DA plus a self-loop;
// attention logits use LeakyReLU(a . [W g_i || W g_j]); heads concatenate
// back to dim. Dropout on attention weights only when a training RNG is
// supplied and dropout_rate > 0.
inline Matrix gat_forward(const Matrix& H, const AdjMatrix& DA, const RegulatorParams& p,
                          GatCache* cache = nullptr, SplitMix64* dropout_rng = nullptr) {
    validate_params(p);
    const std::size_t n = H.rows();
    if (n != DA.n) raise(ErrorCategory::Dimension, "gat_forward: H rows != adjacency size");
    if (H.cols() != p.dim) raise(ErrorCategory::Dimension, "gat_forward: H cols != params dim");
    const std::size_t hd = p.head_dim();
    const auto nbr = neighborhoods(DA);
    if (cache) {
        cache->nbr = nbr;
        cache->layers.assign(p.layers, LayerCache{});
    }

    const bool drop = dropout_rng != nullptr && p.dropout_rate > 0.0;
    const double keep = 1.0 - p.dropout_rate;

    Matrix g = H;
    for (std::size_t l = 0; l < p.layers; ++l) {
        LayerCache* lc = cache ? &cache->layers[l] : nullptr;
        if (lc) {
            lc->input = g;
            lc->heads.assign(p.heads, HeadCache{});
        }
        Matrix next(n, p.dim);
        for (std::size_t k = 0; k < p.heads; ++k) {
            const GatHead& head = p.gat[l][k];
            const double* a_src = head.a.data();
            const double* a_dst = head.a.data() + hd;
            Matrix U(n, hd);
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t r = 0; r < hd; ++r) U(j, r) = dot(head.W.row(r), g.row(j), p.dim);
            HeadCache* hc = lc ? &lc->heads[k] : nullptr;
            if (hc) {
                hc->pre.resize(n);
                hc->alpha.resize(n);
                hc->alpha_used.resize(n);
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto& ni = nbr[i];
                const double src_term = dot(a_src, U.row(i), hd);
                std::vector<double> logits(ni.size());
                std::vector<double> pre(ni.size());
                for (std::size_t t = 0; t < ni.size(); ++t) {
                    const double s = src_term + dot(a_dst, U.row(ni[t]), hd);
                    pre[t] = s;
                    logits[t] = s > 0.0 ? s : p.leaky_slope * s;
                }
                softmax_inplace(logits);
                std::vector<double> used = logits;
                if (drop) {
                    for (double& v : used) {
                        if (dropout_rng->next_double() < p.dropout_rate)
                            v = 0.0;
                        else
                            v /= keep;
                    }
                }
                for (std::size_t t = 0; t < ni.size(); ++t) {
                    const double w = used[t];
                    if (w == 0.0) continue;
                    const double* uj = U.row(ni[t]);
                    double* dst = next.row(i) + k * hd;
                    for (std::size_t r = 0; r < hd; ++r) dst[r] += w * uj[r];
                }
                if (hc) {
                    hc->pre[i] = std::move(pre);
                    hc->alpha[i] = std::move(logits);
                    hc->alpha_used[i] = std::move(used);
                }
            }
            if (hc) hc->U = std::move(U);
        }
        g = std::move(next);
        if (!g.all_finite())
            raise(ErrorCategory::Numeric, "gat_forward: non-finite value in layer " + std::to_string(l));
    }
    return g;
}

// Backward through the cached forward. Accumulates parameter gradients into
// `grads` and returns dL/dH.
inline Matrix gat_backward(const GatCache& cache, const RegulatorParams& p, const Matrix& dG,
                           ParamGrads& grads) {
    const std::size_t n = dG.rows();
    const std::size_t hd = p.head_dim();
    Matrix d_out = dG;
    for (std::size_t l = p.layers; l-- > 0;) {
        const LayerCache& lc = cache.layers[l];
        Matrix d_in(n, p.dim);
        for (std::size_t k = 0; k < p.heads; ++k) {
            const GatHead& head = p.gat[l][k];
            const HeadCache& hc = lc.heads[k];
            const double* a_src = head.a.data();
            const double* a_dst = head.a.data() + hd;
            GatHead& hg = grads.gat[l][k];
            Matrix dU(n, hd);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& ni = cache.nbr[i];
                const double* dy = d_out.row(i) + k * hd;
                // dL/d(alpha_used) and the aggregation half of dU.
                std::vector<double> d_used(ni.size());
                for (std::size_t t = 0; t < ni.size(); ++t) {
                    const std::size_t j = ni[t];
                    d_used[t] = dot(dy, hc.U.row(j), hd);
                    const double w = hc.alpha_used[i][t];
                    if (w != 0.0) {
                        double* duj = dU.row(j);
                        for (std::size_t r = 0; r < hd; ++r) duj[r] += w * dy[r];
                    }
                }
                // Undo the dropout scaling: alpha_used = alpha * mask / keep.
                std::vector<double> d_alpha(ni.size());
                for (std::size_t t = 0; t < ni.size(); ++t) {
                    const double a_val = hc.alpha[i][t];
                    d_alpha[t] = (a_val != 0.0) ? d_used[t] * (hc.alpha_used[i][t] / a_val) : 0.0;
                }
                std::vector<double> d_post = softmax_backward(hc.alpha[i], d_alpha);
                for (std::size_t t = 0; t < ni.size(); ++t) {
                    const std::size_t j = ni[t];
                    const double slope = hc.pre[i][t] > 0.0 ? 1.0 : p.leaky_slope;
                    const double ds = d_post[t] * slope;
                    const double* ui = hc.U.row(i);
                    const double* uj = hc.U.row(j);
                    double* dui = dU.row(i);
                    double* duj = dU.row(j);
                    for (std::size_t r = 0; r < hd; ++r) {
                        hg.a[r] += ds * ui[r];
                        hg.a[hd + r] += ds * uj[r];
                        dui[r] += ds * a_src[r];
                        duj[r] += ds * a_dst[r];
                    }
                }
            }
            // U_j = W x_j: dW += dU_j x_j^T, dX_j += W^T dU_j.
            for (std::size_t j = 0; j < n; ++j) {
                const double* duj = dU.row(j);
                const double* xj = lc.input.row(j);
                double* dxj = d_in.row(j);
                for (std::size_t r = 0; r < hd; ++r) {
                    const double d = duj[r];
                    if (d == 0.0) continue;
                    double* wrow = hg.W.row(r);
                    const double* prow = head.W.row(r);
                    for (std::size_t c = 0; c < p.dim; ++c) {
                        wrow[c] += d * xj[c];
                        dxj[c] += d * prow[c];
                    }
                }
            }
        }
        d_out = std::move(d_in);
    }
    return d_out;
}

// ---------------------------------------------------------------------------
// Score calculator
// ---------------------------------------------------------------------------

struct BiasConfig {
    double l = 128.0; // length constant
    double d = 1.0;   // step constant
};

inline void validate_bias_config(const BiasConfig& cfg) {
    if (!(cfg.l > 0.0)) raise(ErrorCategory::Input, "bias config: l must be positive");
    if (cfg.d < 0.0) raise(ErrorCategory::Input, "bias config: d must be non-negative");
}

// s^bs = softmax(l_i) with l_i = (l - i*d) / n: a strictly decreasing prior
// over original positions whose first interval shrinks as n grows.
inline std::vector<double> bias_score(std::size_t n, const BiasConfig& cfg = {}) {
    validate_bias_config(cfg);
    if (n == 0) raise(ErrorCategory::Input, "bias_score: n must be >= 1");
    std::vector<double> levels(n);
    for (std::size_t i = 0; i < n; ++i)
        levels[i] = (cfg.l - static_cast<double>(i) * cfg.d) / static_cast<double>(n);
    softmax_inplace(levels);
    return levels;
}

// s^rs = softmax over tokens of w_s . g_i.
inline std::vector<double> representation_score(const Matrix& G, const std::vector<double>& w_s) {
    if (G.cols() != w_s.size())
        raise(ErrorCategory::Dimension, "representation_score: G cols != w_s length");
    std::vector<double> z(G.rows());
    for (std::size_t i = 0; i < G.rows(); ++i) z[i] = dot(w_s.data(), G.row(i), w_s.size());
    softmax_inplace(z);
    return z;
}

inline std::vector<double> position_score(const std::vector<double>& rs,
                                          const std::vector<double>& bs) {
    if (rs.size() != bs.size())
        raise(ErrorCategory::Dimension, "position_score: length mismatch");
    std::vector<double> ps(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) ps[i] = rs[i] + bs[i];
    return ps;
}

// Indices sorted by score descending, ties keeping original order.
inline Permutation dynamic_order(const std::vector<double>& ps) {
    for (double v : ps)
        if (!std::isfinite(v)) raise(ErrorCategory::Numeric, "dynamic_order: non-finite score");
    Permutation perm;
    perm.order.resize(ps.size());
    std::iota(perm.order.begin(), perm.order.end(), std::size_t{0});
    std::stable_sort(perm.order.begin(), perm.order.end(),
                     [&](std::size_t a, std::size_t b) { return ps[a] > ps[b]; });
    return perm;
}

struct ScoreBundle {
    std::vector<double> rs;
    std::vector<double> bs;
    std::vector<double> ps;
    Permutation perm;
};

// Full forward state, cached for the backward pass.
struct ForwardResult {
    Matrix G;
    std::vector<double> z; // pre-softmax representation logits
    std::vector<double> rs, bs, ps;
    GatCache cache;
};

inline ForwardResult regulator_forward(const Matrix& H, const AdjMatrix& DA,
                                       const RegulatorParams& p, const BiasConfig& bias = {},
                                       SplitMix64* dropout_rng = nullptr) {
    ForwardResult f;
    f.G = gat_forward(H, DA, p, &f.cache, dropout_rng);
    f.z.resize(f.G.rows());
    for (std::size_t i = 0; i < f.G.rows(); ++i)
        f.z[i] = dot(p.w_s.data(), f.G.row(i), p.dim);
    f.rs = softmax(f.z);
    f.bs = bias_score(f.G.rows(), bias);
    f.ps = position_score(f.rs, f.bs);
    return f;
}

// Backprop dL/dps through scoring and the syntax encoder; the bias score
// carries no parameters, so all gradient flows through rs.
inline void regulator_backward(const ForwardResult& f, const RegulatorParams& p,
                               const std::vector<double>& dps, ParamGrads& grads) {
    const std::size_t n = f.rs.size();
    if (dps.size() != n) raise(ErrorCategory::Dimension, "regulator_backward: dps length mismatch");
    const std::vector<double> dz = softmax_backward(f.rs, dps);
    Matrix dG(n, p.dim);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = dz[i];
        const double* gi = f.G.row(i);
        double* dgi = dG.row(i);
        for (std::size_t c = 0; c < p.dim; ++c) {
            grads.w_s[c] += d * gi[c];
            dgi[c] = d * p.w_s[c];
        }
    }
    gat_backward(f.cache, p, dG, grads);
}

struct RegulateResult {
    Matrix g_permuted;
    ScoreBundle bundle;
};

// The score-based dynamic optimization: encode syntax, score, sort, permute.
inline RegulateResult regulate(const DepSentence& s, const RegulatorParams& p,
                               const BiasConfig& bias = {}) {
    if (!s.reprs)
        raise(ErrorCategory::Input, "regulate: sentence '" + s.id + "' carries no representations");
    const AdjMatrix da = adjacency(s);
    ForwardResult f = regulator_forward(*s.reprs, da, p, bias);
    RegulateResult out;
    out.bundle.rs = f.rs;
    out.bundle.bs = f.bs;
    out.bundle.ps = f.ps;
    out.bundle.perm = dynamic_order(f.ps);
    out.g_permuted = apply_permutation(f.G, out.bundle.perm);
    return out;
}

// ---------------------------------------------------------------------------
// Losses and gradient verification
// ---------------------------------------------------------------------------

enum class LossKind {
    PairProximity, // sum over gold (a, o) pairs of (ps_a - ps_o)^2
    PsTarget,      // 1/2 || ps - 2/n ||^2
    WsFrozen,      // 1/2 || softmax(G w_s) - 1/n ||^2 with G fixed
    Constant,      // parameter-independent; gradients must be exactly zero
};

inline LossKind loss_from_name(const std::string& name) {
    if (name == "pair") return LossKind::PairProximity;
    if (name == "ps-target") return LossKind::PsTarget;
    if (name == "ws-frozen") return LossKind::WsFrozen;
    if (name == "const") return LossKind::Constant;
    raise(ErrorCategory::Input, "unknown loss: " + name);
}

using TokenPair = std::pair<std::size_t, std::size_t>;

inline double pair_loss_from_ps(const std::vector<double>& ps, const std::vector<TokenPair>& pairs,
                                std::vector<double>* dps = nullptr) {
    if (dps) dps->assign(ps.size(), 0.0);
    double loss = 0.0;
    for (const auto& [a, o] : pairs) {
        const double gap = ps[a] - ps[o];
        loss += gap * gap;
        if (dps) {
            (*dps)[a] += 2.0 * gap;
            (*dps)[o] -= 2.0 * gap;
        }
    }
    return loss;
}

inline double ps_target_loss(const std::vector<double>& ps, std::vector<double>* dps = nullptr) {
    const double target = 2.0 / static_cast<double>(ps.size());
    if (dps) dps->assign(ps.size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double r = ps[i] - target;
        loss += 0.5 * r * r;
        if (dps) (*dps)[i] = r;
    }
    return loss;
}

// Scalar loss of the full pipeline under `params`; used as the probe
// function for central differences.
inline double pipeline_loss(const Matrix& H, const AdjMatrix& DA, const RegulatorParams& params,
                            const BiasConfig& bias, LossKind kind,
                            const std::vector<TokenPair>& pairs) {
    if (kind == LossKind::Constant) return 1.0;
    ForwardResult f = regulator_forward(H, DA, params, bias);
    switch (kind) {
        case LossKind::PairProximity: return pair_loss_from_ps(f.ps, pairs);
        case LossKind::PsTarget: return ps_target_loss(f.ps);
        default: raise(ErrorCategory::Input, "pipeline_loss: unsupported loss kind");
    }
}

struct GradCheckOptions {
    LossKind loss = LossKind::PairProximity;
    double eps = 1e-5;
    std::vector<TokenPair> pairs; // empty: use (0, n-1)
    BiasConfig bias;
};

// Central-difference verification of the analytic gradients. Returns
// max |g_analytic - g_fd| / max(1, |g_analytic|, |g_fd|) over the checked
// parameter entries.
inline double grad_check(const RegulatorParams& params, const DepSentence& instance,
                         const GradCheckOptions& opt = {}) {
    if (opt.eps < 1e-6 || opt.eps > 1e-3)
        raise(ErrorCategory::Input, "grad_check: eps must lie in [1e-6, 1e-3]");
    if (!instance.reprs) raise(ErrorCategory::Input, "grad_check: instance carries no representations");
    validate_params(params);
    const Matrix& H = *instance.reprs;
    const AdjMatrix da = adjacency(instance);
    const std::size_t n = instance.size();

    std::vector<TokenPair> pairs = opt.pairs;
    if (pairs.empty() && n >= 2) pairs.push_back({0, n - 1});
    for (const auto& [a, o] : pairs)
        if (a >= n || o >= n) raise(ErrorCategory::Input, "grad_check: pair index out of range");

    auto rel_err = [](double ga, double gf) {
        return std::abs(ga - gf) / std::max({1.0, std::abs(ga), std::abs(gf)});
    };

    if (opt.loss == LossKind::WsFrozen) {
        // G is computed once; only w_s moves. The analytic gradient is the
        // closed-form softmax Jacobian applied to the residual.
        const Matrix G = gat_forward(H, da, params);
        const double target = 1.0 / static_cast<double>(n);
        auto loss_of = [&](const std::vector<double>& ws) {
            std::vector<double> z(n);
            for (std::size_t i = 0; i < n; ++i) z[i] = dot(ws.data(), G.row(i), params.dim);
            softmax_inplace(z);
            double loss = 0.0;
            for (double v : z) loss += 0.5 * (v - target) * (v - target);
            return loss;
        };
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = dot(params.w_s.data(), G.row(i), params.dim);
        const std::vector<double> rs = softmax(z);
        std::vector<double> drs(n);
        for (std::size_t i = 0; i < n; ++i) drs[i] = rs[i] - target;
        const std::vector<double> dz = softmax_backward(rs, drs);
        std::vector<double> analytic(params.dim, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < params.dim; ++c) analytic[c] += dz[i] * G(i, c);
        double worst = 0.0;
        std::vector<double> ws = params.w_s;
        for (std::size_t c = 0; c < params.dim; ++c) {
            const double saved = ws[c];
            ws[c] = saved + opt.eps;
            const double up = loss_of(ws);
            ws[c] = saved - opt.eps;
            const double down = loss_of(ws);
            ws[c] = saved;
            const double fd = (up - down) / (2.0 * opt.eps);
            if (!std::isfinite(fd) || !std::isfinite(analytic[c]))
                raise(ErrorCategory::Numeric, "grad_check: non-finite gradient");
            worst = std::max(worst, rel_err(analytic[c], fd));
        }
        return worst;
    }

    // Analytic gradients of the full pipeline.
    ParamGrads grads = zero_grads(params);
    if (opt.loss != LossKind::Constant) {
        ForwardResult f = regulator_forward(H, da, params, opt.bias);
        std::vector<double> dps;
        if (opt.loss == LossKind::PairProximity)
            pair_loss_from_ps(f.ps, pairs, &dps);
        else
            ps_target_loss(f.ps, &dps);
        regulator_backward(f, params, dps, grads);
    }

    RegulatorParams probe = params;
    std::vector<double*> theta = param_entries(probe);
    std::vector<double*> g = grad_entries(grads);
    double worst = 0.0;
    for (std::size_t idx = 0; idx < theta.size(); ++idx) {
        const double saved = *theta[idx];
        *theta[idx] = saved + opt.eps;
        const double up = pipeline_loss(H, da, probe, opt.bias, opt.loss, pairs);
        *theta[idx] = saved - opt.eps;
        const double down = pipeline_loss(H, da, probe, opt.bias, opt.loss, pairs);
        *theta[idx] = saved;
        const double fd = (up - down) / (2.0 * opt.eps);
        if (!std::isfinite(fd) || !std::isfinite(*g[idx]))
            raise(ErrorCategory::Numeric, "grad_check: non-finite gradient");
        worst = std::max(worst, rel_err(*g[idx], fd));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Surrogate trainer
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t epochs = 200;
    double lr = 0.1;
    std::uint64_t seed = 5;
    BiasConfig bias;
    bool dropout = false; // deterministic by default
};

struct TrainMetrics {
    std::vector<double> epoch_loss; // loss at the start of each epoch
    double final_loss = 0.0;
    double initial_rank_distance = 0.0;
    double final_rank_distance = 0.0;
    std::size_t pair_count = 0;
};

namespace detail {

struct TrainInstance {
    Matrix H;
    AdjMatrix da;
    std::vector<TokenPair> pairs; // (aspect head, opinion head), last span token
};

inline std::vector<TrainInstance> prepare_instances(const std::vector<LabeledExample>& examples) {
    if (examples.empty()) raise(ErrorCategory::Input, "train_surrogate: empty example set");
    std::vector<TrainInstance> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        if (!ex.parse || !ex.parse->reprs)
            raise(ErrorCategory::Input,
                  "train_surrogate: example '" + ex.id + "' lacks a parse with representations");
        TrainInstance inst;
        inst.H = *ex.parse->reprs;
        inst.da = adjacency(*ex.parse);
        const std::size_t n = ex.parse->size();
        for (const auto& t : ex.tuples) {
            if (!t.aspect_span || !t.opinion_span)
                raise(ErrorCategory::Input,
                      "train_surrogate: example '" + ex.id + "' has a tuple without spans");
            const std::size_t a = t.aspect_span->second - 1;
            const std::size_t o = t.opinion_span->second - 1;
            if (a >= n || o >= n)
                raise(ErrorCategory::Input,
                      "train_surrogate: example '" + ex.id + "' span exceeds parse length");
            inst.pairs.push_back({a, o});
        }
        if (inst.pairs.empty())
            raise(ErrorCategory::Input, "train_surrogate: example '" + ex.id + "' has no pairs");
        out.push_back(std::move(inst));
    }
    return out;
}

} // namespace detail

// Mean |rank(aspect) - rank(opinion)| under the current parameters, where
// rank is the position a token takes in the regulated sequence.
inline double mean_rank_distance(const std::vector<detail::TrainInstance>& instances,
                                 const RegulatorParams& params, const BiasConfig& bias) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& inst : instances) {
        ForwardResult f = regulator_forward(inst.H, inst.da, params, bias);
        const Permutation rank = dynamic_order(f.ps).inverse();
        for (const auto& [a, o] : inst.pairs) {
            const double d = static_cast<double>(rank.order[a]) - static_cast<double>(rank.order[o]);
            total += std::abs(d);
            ++count;
        }
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

// Full-batch gradient descent on the pair-proximity loss
// L = sum over gold (a, o) pairs of (ps_a - ps_o)^2.
inline TrainMetrics train_surrogate(const std::vector<LabeledExample>& examples,
                                    RegulatorParams& params, const TrainConfig& cfg = {}) {
    validate_params(params);
    validate_bias_config(cfg.bias);
    const auto instances = detail::prepare_instances(examples);

    TrainMetrics metrics;
    for (const auto& inst : instances) metrics.pair_count += inst.pairs.size();
    metrics.initial_rank_distance = mean_rank_distance(instances, params, cfg.bias);

    SplitMix64 dropout_rng = seeded_stream(cfg.seed, 0xD0);
    auto epoch_pass = [&](bool update) {
        ParamGrads grads = zero_grads(params);
        double loss = 0.0;
        for (const auto& inst : instances) {
            SplitMix64* rng = cfg.dropout ? &dropout_rng : nullptr;
            ForwardResult f = regulator_forward(inst.H, inst.da, params, cfg.bias, rng);
            std::vector<double> dps;
            loss += pair_loss_from_ps(f.ps, inst.pairs, &dps);
            if (update) regulator_backward(f, params, dps, grads);
        }
        if (update) {
            std::vector<double*> theta = param_entries(params);
            std::vector<double*> g = grad_entries(grads);
            for (std::size_t i = 0; i < theta.size(); ++i) {
                if (!std::isfinite(*g[i]))
                    raise(ErrorCategory::Numeric, "train_surrogate: non-finite gradient");
                *theta[i] -= cfg.lr * *g[i];
            }
        }
        return loss;
    };

    metrics.epoch_loss.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch)
        metrics.epoch_loss.push_back(epoch_pass(true));
    metrics.final_loss = epoch_pass(false);
    metrics.final_rank_distance = mean_rank_distance(instances, params, cfg.bias);
    return metrics;
}

// ---------------------------------------------------------------------------
// Parameter file: JSON with shape metadata and row-major matrices
// ---------------------------------------------------------------------------

inline nlohmann::json params_to_json(const RegulatorParams& p) {
    nlohmann::json j;
    j["dim"] = p.dim;
    j["layers"] = p.layers;
    j["heads"] = p.heads;
    j["leaky_slope"] = p.leaky_slope;
    j["dropout_rate"] = p.dropout_rate;
    j["w_s"] = p.w_s;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : p.gat) {
        nlohmann::json heads = nlohmann::json::array();
        for (const auto& head : layer)
            heads.push_back({{"W", head.W.data()}, {"a", head.a}});
        layers.push_back({{"heads", heads}});
    }
    j["gat"] = layers;
    return j;
}

inline RegulatorParams params_from_json(const nlohmann::json& j) {
    RegulatorParams p;
    try {
        p.dim = j.at("dim").get<std::size_t>();
        p.layers = j.at("layers").get<std::size_t>();
        p.heads = j.at("heads").get<std::size_t>();
        p.leaky_slope = j.value("leaky_slope", 0.05);
        p.dropout_rate = j.value("dropout_rate", 0.4);
        p.w_s = j.at("w_s").get<std::vector<double>>();
        if (p.heads == 0 || p.dim % p.heads != 0)
            raise(ErrorCategory::Format, "params file: dim not divisible by heads");
        const std::size_t hd = p.dim / p.heads;
        for (const auto& lj : j.at("gat")) {
            std::vector<GatHead> layer;
            for (const auto& hj : lj.at("heads")) {
                GatHead head;
                auto w = hj.at("W").get<std::vector<double>>();
                if (w.size() != hd * p.dim)
                    raise(ErrorCategory::Format, "params file: W has wrong size");
                head.W = Matrix(hd, p.dim);
                head.W.data() = std::move(w);
                head.a = hj.at("a").get<std::vector<double>>();
                layer.push_back(std::move(head));
            }
            p.gat.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCategory::Format, std::string("params file: ") + e.what());
    }
    validate_params(p);
    return p;
}

inline void save_params(const std::string& path, const RegulatorParams& p) {
    std::ofstream out(path);
    if (!out) raise(ErrorCategory::Input, "cannot write params file: " + path);
    out << params_to_json(p).dump(2) << "\n";
}

inline RegulatorParams load_params(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCategory::Format, "params file '" + path + "': " + e.what());
    }
    return params_from_json(j);
}

} // namespace seqreg
