#include "cnas/elastic_net.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cnas/errors.hpp"
#include "cnas/kernels.hpp"

namespace cnas {

namespace kn = kernels::parallel;

// ---- BaseArchConfig ---------------------------------------------------

void BaseArchConfig::check() const {
    if (input_channels < 1 || input_side < 1 || stem_channels < 1 || classes < 1)
        throw ConfigError("base architecture sizes must be positive");
    if (stem_stride != 1 && stem_stride != 2) throw ConfigError("stem stride must be 1 or 2");
    if (block_channels.empty() || block_channels.size() != block_strides.size())
        throw ConfigError("block channel and stride lists must be non-empty and of equal length");
    for (int c : block_channels)
        if (c < 1) throw ConfigError("block channels must be positive");
    for (int s : block_strides)
        if (s != 1 && s != 2) throw ConfigError("block strides must be 1 or 2");
    if (!(width_multiplier > 0.0)) throw ConfigError("width multiplier must be positive");
}

int BaseArchConfig::scaled(int channels) const {
    return std::max(1, static_cast<int>(std::ceil(channels * width_multiplier - 1e-9)));
}

BaseArchConfig BaseArchConfig::toy() { return BaseArchConfig{}; }

BaseArchConfig BaseArchConfig::mobilenet_v3_reference() {
    BaseArchConfig b;
    b.input_channels = 3;
    b.input_side = 224;
    b.stem_channels = 16;
    b.stem_stride = 2;
    b.block_channels = {24, 40, 80, 112, 160};
    b.block_strides = {2, 2, 2, 1, 2};
    b.classes = 1000;
    b.width_multiplier = 1.0;
    return b;
}

nlohmann::json to_json(const BaseArchConfig& b) {
    return {{"input_channels", b.input_channels}, {"input_side", b.input_side},
            {"stem_channels", b.stem_channels},   {"stem_stride", b.stem_stride},
            {"block_channels", b.block_channels}, {"block_strides", b.block_strides},
            {"classes", b.classes},               {"width_multiplier", b.width_multiplier}};
}

BaseArchConfig base_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "toy") return BaseArchConfig::toy();
        if (name == "mobilenet-v3") return BaseArchConfig::mobilenet_v3_reference();
        throw ConfigError("unknown base architecture preset '" + name + "'");
    }
    try {
        BaseArchConfig b;
        b.input_channels = j.value("input_channels", b.input_channels);
        b.input_side = j.value("input_side", b.input_side);
        b.stem_channels = j.value("stem_channels", b.stem_channels);
        b.stem_stride = j.value("stem_stride", b.stem_stride);
        b.block_channels = j.value("block_channels", b.block_channels);
        b.block_strides = j.value("block_strides", b.block_strides);
        b.classes = j.value("classes", b.classes);
        b.width_multiplier = j.value("width_multiplier", b.width_multiplier);
        b.check();
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed base architecture JSON: ") + e.what());
    }
}

int expanded_channels(int cin, double width) {
    return std::max(1, static_cast<int>(std::ceil(cin * width - 1e-9)));
}

// ---- layout -----------------------------------------------------------

NetLayout NetLayout::build(const BaseArchConfig& base, const SearchSpaceDef& space) {
    NetLayout L;
    L.kmax = space.max_kernel();
    auto add = [&L](std::string name, std::vector<int> shape) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        L.tensors.push_back(ParamTensor{std::move(name), std::move(shape), L.total, n});
        L.total += n;
        return L.tensors.back().offset;
    };
    const int cs = base.stem_out();
    L.stem_w = add("stem.weight", {cs, base.input_channels, 3, 3});
    L.stem_s = add("stem.scale", {cs});
    L.stem_b = add("stem.bias", {cs});
    int cin = cs;
    for (int b = 0; b < space.blocks; ++b) {
        const int cout = base.block_out(b);
        std::vector<LayerLayout> layers;
        for (int l = 0; l < space.max_depth(); ++l) {
            LayerLayout ll;
            ll.cin = l == 0 ? cin : cout;
            ll.cout = cout;
            ll.stride = l == 0 ? base.block_strides[static_cast<std::size_t>(b)] : 1;
            ll.residual = ll.stride == 1 && ll.cin == ll.cout;
            ll.emax = expanded_channels(ll.cin, space.max_width());
            const std::string p = "blocks." + std::to_string(b) + "." + std::to_string(l) + ".";
            ll.expand_w = add(p + "expand.weight", {ll.emax, ll.cin});
            ll.expand_s = add(p + "expand.scale", {ll.emax});
            ll.expand_b = add(p + "expand.bias", {ll.emax});
            ll.dw_w = add(p + "depthwise.weight", {ll.emax, L.kmax, L.kmax});
            ll.dw_s = add(p + "depthwise.scale", {ll.emax});
            ll.dw_b = add(p + "depthwise.bias", {ll.emax});
            ll.proj_w = add(p + "project.weight", {cout, ll.emax});
            ll.proj_s = add(p + "project.scale", {cout});
            ll.proj_b = add(p + "project.bias", {cout});
            layers.push_back(ll);
        }
        L.blocks.push_back(std::move(layers));
        cin = cout;
    }
    L.head_in = cin;
    L.head_w = add("head.weight", {base.classes, cin});
    L.head_b = add("head.bias", {base.classes});
    return L;
}

SupernetParams build_supernet(const BaseArchConfig& base, const SearchSpaceDef& space, std::uint64_t seed) {
    base.check();
    space.check();
    if (base.blocks() != space.blocks)
        throw IncompatibleSpace("base architecture has " + std::to_string(base.blocks()) + " blocks, space has " +
                                std::to_string(space.blocks));
    SupernetParams p;
    p.base = base;
    p.space = space;
    p.seed = seed;
    p.layout = NetLayout::build(base, space);
    p.values.assign(p.layout.total, 0.0);

    // Residual-branch projections are shrunk by 1/sqrt(R) over the R
    // residual layers so activations stay bounded without normalization.
    std::vector<std::size_t> residual_proj;
    for (const auto& block : p.layout.blocks)
        for (const auto& ll : block)
            if (ll.residual) residual_proj.push_back(ll.proj_w);
    const double residual_gain = residual_proj.empty() ? 1.0 : 1.0 / static_cast<double>(residual_proj.size());

    Rng rng(seed);
    for (const auto& t : p.layout.tensors) {
        const auto& name = t.name;
        const bool is_bias = name.ends_with(".bias");
        const bool is_scale = name.ends_with(".scale");
        if (is_bias) continue;  // zeros
        if (is_scale) {
            std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size, 1.0);
            continue;
        }
        // Fan-in: product of all but the leading dimension.
        std::size_t fan_in = 1;
        for (std::size_t d = 1; d < t.shape.size(); ++d) fan_in *= static_cast<std::size_t>(t.shape[d]);
        const bool linear_out = name.ends_with("project.weight") || name == "head.weight";
        double gain = linear_out ? 3.0 : 6.0;
        if (std::find(residual_proj.begin(), residual_proj.end(), t.offset) != residual_proj.end()) gain *= residual_gain;
        const double bound = std::sqrt(gain / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < t.size; ++i) p.values[t.offset + i] = u(rng);
    }
    return p;
}

// ---- slicing ----------------------------------------------------------

SubnetView SubnetView::with_resolution(int r) const {
    SubnetView v = *this;
    v.arch.resolution = r;
    return v;
}

SubnetView slice_subnet(const SupernetParams& params, const ArchSpec& arch) {
    SearchSpaceDef relaxed = independent_relaxation(params.space);
    // Resolution does not select parameters; any positive side is accepted.
    relaxed.resolutions = {arch.resolution};
    if (arch.resolution < 1 || !validate(relaxed, arch))
        throw InvalidArch("architecture is outside the supernet's stored extents");
    SubnetView v;
    v.params = &params;
    v.arch = arch;
    for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
        const auto& cfg = arch.blocks[b];
        std::vector<ActiveLayer> layers;
        for (int l = 0; l < cfg.depth; ++l) {
            const auto& ll = params.layout.blocks[b][static_cast<std::size_t>(l)];
            layers.push_back(ActiveLayer{&ll, expanded_channels(ll.cin, cfg.widths[static_cast<std::size_t>(l)]),
                                         cfg.kernels[static_cast<std::size_t>(l)]});
        }
        v.blocks.push_back(std::move(layers));
    }
    return v;
}

std::vector<std::uint8_t> slice_mask(const SubnetView& view) {
    const auto& P = *view.params;
    const auto& L = P.layout;
    std::vector<std::uint8_t> m(P.size(), 0);
    auto mark = [&m](std::size_t off, std::size_t n) { std::fill_n(m.begin() + static_cast<std::ptrdiff_t>(off), n, 1); };
    const int cs = P.base.stem_out();
    mark(L.stem_w, static_cast<std::size_t>(cs) * P.base.input_channels * 9);
    mark(L.stem_s, static_cast<std::size_t>(cs));
    mark(L.stem_b, static_cast<std::size_t>(cs));
    for (const auto& block : view.blocks)
        for (const auto& a : block) {
            const auto& ll = *a.layout;
            const auto E = static_cast<std::size_t>(a.expanded);
            mark(ll.expand_w, E * ll.cin);
            mark(ll.expand_s, E);
            mark(ll.expand_b, E);
            const int off = (L.kmax - a.kernel) / 2;
            for (std::size_t c = 0; c < E; ++c)
                for (int ky = 0; ky < a.kernel; ++ky)
                    mark(ll.dw_w + c * L.kmax * L.kmax + static_cast<std::size_t>((ky + off) * L.kmax + off),
                         static_cast<std::size_t>(a.kernel));
            mark(ll.dw_s, E);
            mark(ll.dw_b, E);
            for (int o = 0; o < ll.cout; ++o) mark(ll.proj_w + static_cast<std::size_t>(o) * ll.emax, E);
            mark(ll.proj_s, static_cast<std::size_t>(ll.cout));
            mark(ll.proj_b, static_cast<std::size_t>(ll.cout));
        }
    mark(L.head_w, static_cast<std::size_t>(P.base.classes) * static_cast<std::size_t>(L.head_in));
    mark(L.head_b, static_cast<std::size_t>(P.base.classes));
    return m;
}

// ---- forward / backward -----------------------------------------------

namespace {

struct LayerTrace {
    Tensor x, e_lin, e_act, d_lin, d_act, p_lin, y;
};

struct Trace {
    Tensor input, stem_lin, stem_act;
    std::vector<std::vector<LayerTrace>> layers;
    Matrix pooled;
};

Matrix run_forward(const SubnetView& view, const Tensor& batch, Trace* trace) {
    const auto& P = *view.params;
    const auto& L = P.layout;
    const double* v = P.values.data();
    if (batch.h != view.resolution() || batch.w != view.resolution() || batch.c != P.base.input_channels)
        throw ShapeMismatch("batch is " + std::to_string(batch.c) + "x" + std::to_string(batch.h) + "x" +
                            std::to_string(batch.w) + ", view expects " + std::to_string(P.base.input_channels) +
                            "x" + std::to_string(view.resolution()) + "x" + std::to_string(view.resolution()));

    Tensor stem_lin, x;
    kn::conv_forward(batch, v + L.stem_w, P.base.stem_out(), 3, P.base.stem_stride, stem_lin);
    kn::affine_forward(stem_lin, v + L.stem_s, v + L.stem_b, true, x);
    if (trace) {
        trace->input = batch;
        trace->stem_lin = std::move(stem_lin);
        trace->stem_act = x;
        trace->layers.assign(view.blocks.size(), {});
    }

    for (std::size_t b = 0; b < view.blocks.size(); ++b)
        for (const auto& a : view.blocks[b]) {
            const auto& ll = *a.layout;
            LayerTrace t;
            kn::pointwise_forward(x, v + ll.expand_w, ll.cin, a.expanded, t.e_lin);
            kn::affine_forward(t.e_lin, v + ll.expand_s, v + ll.expand_b, true, t.e_act);
            kn::depthwise_forward(t.e_act, v + ll.dw_w, L.kmax, a.kernel, ll.stride, t.d_lin);
            kn::affine_forward(t.d_lin, v + ll.dw_s, v + ll.dw_b, true, t.d_act);
            kn::pointwise_forward(t.d_act, v + ll.proj_w, ll.emax, ll.cout, t.p_lin);
            kn::affine_forward(t.p_lin, v + ll.proj_s, v + ll.proj_b, false, t.y);
            if (ll.residual)
                for (std::size_t i = 0; i < t.y.size(); ++i) t.y.data[i] += x.data[i];
            if (trace) {
                t.x = std::move(x);
                x = t.y;
                trace->layers[b].push_back(std::move(t));
            } else {
                x = std::move(t.y);
            }
        }

    const int N = x.n, C = x.c, K = P.base.classes;
    const auto plane = x.plane();
    Matrix pooled(N, C);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            const double* src = x.channel(n, c);
            for (std::size_t p = 0; p < plane; ++p) s += src[p];
            pooled(n, c) = s / static_cast<double>(plane);
        }
    Matrix scores(N, K);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
            double s = v[L.head_b + static_cast<std::size_t>(k)];
            for (int c = 0; c < C; ++c) s += v[L.head_w + static_cast<std::size_t>(k) * C + c] * pooled(n, c);
            scores(n, k) = s;
        }
    if (trace) trace->pooled = std::move(pooled);
    return scores;
}

void run_backward(const SubnetView& view, const Trace& t, const Matrix& dscores, double* g) {
    const auto& P = *view.params;
    const auto& L = P.layout;
    const double* v = P.values.data();
    const int N = dscores.rows, K = dscores.cols, C = t.pooled.cols;

    Matrix dpooled(N, C);
    for (int k = 0; k < K; ++k) {
        double gb = 0.0;
        for (int n = 0; n < N; ++n) gb += dscores(n, k);
        g[L.head_b + static_cast<std::size_t>(k)] += gb;
        for (int c = 0; c < C; ++c) {
            double gw = 0.0;
            for (int n = 0; n < N; ++n) gw += dscores(n, k) * t.pooled(n, c);
            g[L.head_w + static_cast<std::size_t>(k) * C + c] += gw;
        }
    }
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int k = 0; k < K; ++k) s += v[L.head_w + static_cast<std::size_t>(k) * C + c] * dscores(n, k);
            dpooled(n, c) = s;
        }

    // Shape of the last feature map.
    const Tensor* last = &t.stem_act;
    for (const auto& blk : t.layers)
        if (!blk.empty()) last = &blk.back().y;
    Tensor dy(last->n, last->c, last->h, last->w);
    const auto plane = dy.plane();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double val = dpooled(n, c) / static_cast<double>(plane);
            std::fill_n(dy.channel(n, c), plane, val);
        }

    for (std::size_t b = view.blocks.size(); b-- > 0;)
        for (std::size_t li = view.blocks[b].size(); li-- > 0;) {
            const auto& a = view.blocks[b][li];
            const auto& ll = *a.layout;
            const auto& lt = t.layers[b][li];
            Tensor dp_lin, dd_act, dd_lin, de_act, de_lin, dx;
            kn::affine_backward(lt.p_lin, lt.y, v + ll.proj_s, false, dy, dp_lin, g + ll.proj_s, g + ll.proj_b);
            kn::pointwise_backward(lt.d_act, v + ll.proj_w, ll.emax, dp_lin, &dd_act, g + ll.proj_w);
            kn::affine_backward(lt.d_lin, lt.d_act, v + ll.dw_s, true, dd_act, dd_lin, g + ll.dw_s, g + ll.dw_b);
            kn::depthwise_backward(lt.e_act, v + ll.dw_w, L.kmax, a.kernel, ll.stride, dd_lin, &de_act, g + ll.dw_w);
            kn::affine_backward(lt.e_lin, lt.e_act, v + ll.expand_s, true, de_act, de_lin, g + ll.expand_s,
                                g + ll.expand_b);
            kn::pointwise_backward(lt.x, v + ll.expand_w, ll.cin, de_lin, &dx, g + ll.expand_w);
            if (ll.residual)
                for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dy.data[i];
            dy = std::move(dx);
        }

    Tensor ds_lin;
    kn::affine_backward(t.stem_lin, t.stem_act, v + L.stem_s, true, dy, ds_lin, g + L.stem_s, g + L.stem_b);
    kn::conv_backward(t.input, v + L.stem_w, 3, P.base.stem_stride, ds_lin, nullptr, g + L.stem_w);
}

void softmax_row(std::span<const double> z, double inv_t, std::vector<double>& out) {
    out.resize(z.size());
    double mx = z[0] * inv_t;
    for (double x : z) mx = std::max(mx, x * inv_t);
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) s += (out[j] = std::exp(z[j] * inv_t - mx));
    for (auto& o : out) o /= s;
}

}  // namespace

Matrix forward(const SubnetView& view, const Tensor& batch) { return run_forward(view, batch, nullptr); }

double loss_and_gradient(const SubnetView& view, const Tensor& batch, std::span<const int> labels,
                         const Matrix* teacher_scores, const KdConfig& kd, std::vector<double>* grad,
                         double grad_scale, std::vector<std::uint8_t>* touched) {
    if (static_cast<std::size_t>(batch.n) != labels.size()) throw ShapeMismatch("label count differs from batch size");
    Trace trace;
    const Matrix scores = run_forward(view, batch, grad ? &trace : nullptr);
    const int N = scores.rows, K = scores.cols;
    if (teacher_scores && (teacher_scores->rows != N || teacher_scores->cols != K))
        throw ShapeMismatch("teacher scores shape differs from student scores");
    const double inv_t = 1.0 / kd.temperature;
    Matrix dscores(N, K);
    std::vector<double> q, qt, pt;
    double loss = 0.0;
    for (int n = 0; n < N; ++n) {
        const int y = labels[static_cast<std::size_t>(n)];
        if (y < 0 || y >= K) throw ShapeMismatch("label out of range");
        softmax_row(scores.row(n), 1.0, q);
        loss -= std::log(std::max(q[static_cast<std::size_t>(y)], 1e-300));
        for (int k = 0; k < K; ++k) dscores(n, k) = q[static_cast<std::size_t>(k)] - (k == y ? 1.0 : 0.0);
        if (teacher_scores && kd.lambda != 0.0) {
            softmax_row(scores.row(n), inv_t, qt);
            softmax_row(teacher_scores->row(n), inv_t, pt);
            double soft = 0.0;
            for (int k = 0; k < K; ++k) {
                soft -= pt[static_cast<std::size_t>(k)] * std::log(std::max(qt[static_cast<std::size_t>(k)], 1e-300));
                dscores(n, k) += kd.lambda * (qt[static_cast<std::size_t>(k)] - pt[static_cast<std::size_t>(k)]) * inv_t;
            }
            loss += kd.lambda * soft;
        }
    }
    loss /= N;
    if (grad) {
        const double s = grad_scale / N;
        for (auto& d : dscores.data) d *= s;
        run_backward(view, trace, dscores, grad->data());
    }
    if (touched) {
        const auto m = slice_mask(view);
        for (std::size_t i = 0; i < m.size(); ++i) (*touched)[i] |= m[i];
    }
    return loss;
}

double train_step(SupernetParams& params, SgdState& state, std::span<const ArchSpec> archs, const Tensor& batch,
                  std::span<const int> labels, const SubnetView* teacher, double lr, const KdConfig& kd,
                  const SgdConfig& sgd) {
    if (archs.empty()) throw InvalidArch("train_step needs at least one architecture");
    if (state.velocity.size() != params.size()) state.velocity.assign(params.size(), 0.0);
    std::vector<double> grad(params.size(), 0.0);
    std::vector<std::uint8_t> touched(params.size(), 0);
    std::map<int, Tensor> resized;
    std::map<int, Matrix> teacher_scores;
    const double inv_n = 1.0 / static_cast<double>(archs.size());
    double loss = 0.0;
    for (const auto& arch : archs) {
        const SubnetView view = slice_subnet(params, arch);
        auto it = resized.find(arch.resolution);
        if (it == resized.end()) it = resized.emplace(arch.resolution, resize_bilinear(batch, arch.resolution)).first;
        const Matrix* ts = nullptr;
        if (teacher && kd.lambda != 0.0) {
            auto jt = teacher_scores.find(arch.resolution);
            if (jt == teacher_scores.end())
                jt = teacher_scores.emplace(arch.resolution, forward(teacher->with_resolution(arch.resolution), it->second))
                         .first;
            ts = &jt->second;
        }
        loss += inv_n * loss_and_gradient(view, it->second, labels, ts, kd, &grad, inv_n, &touched);
    }
    if (!std::isfinite(loss)) throw NonFiniteLoss("training loss is not finite");
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (touched[i] && !std::isfinite(grad[i])) throw NonFiniteLoss("gradient is not finite");

    double clip = 1.0;
    if (sgd.clip_norm > 0.0) {
        double sq = 0.0;
        for (double g : grad) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > sgd.clip_norm) clip = sgd.clip_norm / norm;
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!touched[i]) continue;
        const double g = clip * grad[i] + sgd.weight_decay * params.values[i];
        state.velocity[i] = sgd.momentum * state.velocity[i] + g;
        params.values[i] -= lr * state.velocity[i];
    }
    return loss;
}

double evaluate_accuracy(const SubnetView& view, const Tensor& images, std::span<const int> labels, int batch_size) {
    if (static_cast<std::size_t>(images.n) != labels.size()) throw ShapeMismatch("label count differs from image count");
    if (images.n == 0) return 0.0;
    const Tensor sized = resize_bilinear(images, view.resolution());
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (int start = 0; start < sized.n; start += batch_size) {
        const int end = std::min(sized.n, start + batch_size);
        idx.resize(static_cast<std::size_t>(end - start));
        for (int i = start; i < end; ++i) idx[static_cast<std::size_t>(i - start)] = static_cast<std::size_t>(i);
        const Matrix s = forward(view, gather_samples(sized, idx));
        for (int r = 0; r < s.rows; ++r) {
            const auto row = s.row(r);
            const auto best = std::max_element(row.begin(), row.end()) - row.begin();
            if (best == labels[static_cast<std::size_t>(start + r)]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(images.n);
}

}  // namespace cnas
