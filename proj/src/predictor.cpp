#include "cnas/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "cnas/checkpoint.hpp"
#include "cnas/errors.hpp"

namespace cnas {

namespace {

struct Activations {
    std::vector<double> h1, h2;
    double out = 0.0;
};

void dense_relu(const std::vector<double>& w, const std::vector<double>& b, const double* x, int in, int out,
                std::vector<double>& y) {
    y.resize(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
        double s = b[static_cast<std::size_t>(o)];
        const double* row = w.data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) s += row[i] * x[i];
        y[static_cast<std::size_t>(o)] = std::max(s, 0.0);
    }
}

// Output in normalized target units.
double run(const PredictorNet& net, const std::vector<double>& x, Activations& a) {
    dense_relu(net.w1, net.b1, x.data(), net.inputs, net.hidden, a.h1);
    dense_relu(net.w2, net.b2, a.h1.data(), net.hidden, net.hidden, a.h2);
    double s = net.b3;
    for (int i = 0; i < net.hidden; ++i) s += net.w3[static_cast<std::size_t>(i)] * a.h2[static_cast<std::size_t>(i)];
    return a.out = s;
}

std::vector<double> as_input(const PredictorNet& net, const ArchEncoding& enc) {
    if (enc.bits.size() != static_cast<std::size_t>(net.inputs))
        throw ShapeMismatch("encoding has " + std::to_string(enc.bits.size()) + " bits, predictor expects " +
                            std::to_string(net.inputs));
    return std::vector<double>(enc.bits.begin(), enc.bits.end());
}

struct Grads {
    std::vector<double> w1, b1, w2, b2, w3;
    double b3 = 0.0;

    explicit Grads(const PredictorNet& n)
        : w1(n.w1.size()), b1(n.b1.size()), w2(n.w2.size()), b2(n.b2.size()), w3(n.w3.size()) {}
    void zero() {
        for (auto* v : {&w1, &b1, &w2, &b2, &w3}) std::fill(v->begin(), v->end(), 0.0);
        b3 = 0.0;
    }
};

void accumulate(const PredictorNet& net, const std::vector<double>& x, const Activations& a, double dy, Grads& g) {
    const int H = net.hidden, I = net.inputs;
    std::vector<double> d2(static_cast<std::size_t>(H)), d1(static_cast<std::size_t>(H), 0.0);
    g.b3 += dy;
    for (int j = 0; j < H; ++j) {
        const auto js = static_cast<std::size_t>(j);
        g.w3[js] += dy * a.h2[js];
        d2[js] = a.h2[js] > 0.0 ? dy * net.w3[js] : 0.0;
    }
    for (int j = 0; j < H; ++j) {
        const double dj = d2[static_cast<std::size_t>(j)];
        if (dj == 0.0) continue;
        g.b2[static_cast<std::size_t>(j)] += dj;
        const std::size_t row = static_cast<std::size_t>(j) * H;
        for (int i = 0; i < H; ++i) {
            g.w2[row + static_cast<std::size_t>(i)] += dj * a.h1[static_cast<std::size_t>(i)];
            d1[static_cast<std::size_t>(i)] += dj * net.w2[row + static_cast<std::size_t>(i)];
        }
    }
    for (int i = 0; i < H; ++i) {
        const auto is = static_cast<std::size_t>(i);
        if (a.h1[is] <= 0.0) continue;
        g.b1[is] += d1[is];
        const std::size_t row = is * static_cast<std::size_t>(I);
        for (int k = 0; k < I; ++k) g.w1[row + static_cast<std::size_t>(k)] += d1[is] * x[static_cast<std::size_t>(k)];
    }
}

double rmse(const PredictorNet& net, std::span<const TrainingPair> pairs, const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i : idx) {
        const double e = net.raw_output(pairs[i].encoding) - pairs[i].accuracy;
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(idx.size()));
}

}  // namespace

PredictorNet PredictorNet::init(int inputs, int hidden, std::uint64_t seed) {
    if (inputs < 1 || hidden < 1) throw ConfigError("predictor layer sizes must be positive");
    PredictorNet n;
    n.inputs = inputs;
    n.hidden = hidden;
    Rng rng(seed);
    auto fill = [&rng](std::vector<double>& v, std::size_t size, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        v.resize(size);
        for (auto& x : v) x = u(rng);
    };
    const auto I = static_cast<std::size_t>(inputs), H = static_cast<std::size_t>(hidden);
    fill(n.w1, H * I, std::sqrt(6.0 / static_cast<double>(inputs)));
    fill(n.w2, H * H, std::sqrt(6.0 / static_cast<double>(hidden)));
    // Zero output layer: the untrained net predicts the target mean.
    n.w3.assign(H, 0.0);
    n.b1.assign(H, 0.0);
    n.b2.assign(H, 0.0);
    return n;
}

double PredictorNet::raw_output(const ArchEncoding& enc) const {
    Activations a;
    return target_shift + target_scale * run(*this, as_input(*this, enc), a);
}

double predict(const PredictorNet& net, const ArchEncoding& enc) {
    return std::clamp(net.raw_output(enc), 0.0, 1.0);
}

PredictorFit train_predictor(std::span<const TrainingPair> pairs, const PredictorConfig& cfg) {
    if (pairs.size() < kMinPredictorPairs)
        throw InsufficientData("predictor needs at least " + std::to_string(kMinPredictorPairs) + " pairs, got " +
                               std::to_string(pairs.size()));
    if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.lr > 0.0) || !(cfg.validation_fraction >= 0.0) ||
        !(cfg.validation_fraction < 1.0))
        throw ConfigError("invalid predictor configuration");
    const std::size_t inputs = pairs[0].encoding.bits.size();
    for (const auto& p : pairs) {
        if (p.encoding.bits.size() != inputs) throw ShapeMismatch("training encodings differ in length");
        if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0)) throw ConfigError("training accuracy outside [0, 1]");
    }

    // Canonical order first, so the split depends on the seed only.
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pairs[a].encoding.bits != pairs[b].encoding.bits) return pairs[a].encoding.bits < pairs[b].encoding.bits;
        return pairs[a].accuracy < pairs[b].accuracy;
    });
    Rng rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(pairs.size())));
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    PredictorFit fit;
    PredictorNet& net = fit.net;
    net = PredictorNet::init(static_cast<int>(inputs), cfg.hidden, cfg.seed ^ 0x2545f4914f6cdd1dULL);
    double mean = 0.0;
    for (std::size_t i : train) mean += pairs[i].accuracy;
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (std::size_t i : train) var += (pairs[i].accuracy - mean) * (pairs[i].accuracy - mean);
    const double sd = std::sqrt(var / static_cast<double>(train.size()));
    net.target_shift = mean;
    net.target_scale = sd > 1e-12 ? sd : 1.0;

    std::vector<std::vector<double>> x(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) x[i] = as_input(net, pairs[i].encoding);

    Grads g(net), v(net);
    v.zero();
    Activations a;
    auto step = [&](std::vector<double>& p, std::vector<double>& vel, const std::vector<double>& gr) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            vel[i] = cfg.momentum * vel[i] + gr[i];
            p[i] -= cfg.lr * vel[i];
        }
    };
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (int e = 0; e < cfg.epochs; ++e) {
        std::shuffle(train.begin(), train.end(), rng);
        for (std::size_t start = 0; start < train.size(); start += bs) {
            const std::size_t end = std::min(train.size(), start + bs);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            g.zero();
            for (std::size_t t = start; t < end; ++t) {
                const std::size_t i = train[t];
                const double target = (pairs[i].accuracy - net.target_shift) / net.target_scale;
                const double y = run(net, x[i], a);
                accumulate(net, x[i], a, (y - target) * inv_b, g);
            }
            step(net.w1, v.w1, g.w1);
            step(net.b1, v.b1, g.b1);
            step(net.w2, v.w2, g.w2);
            step(net.b2, v.b2, g.b2);
            step(net.w3, v.w3, g.w3);
            v.b3 = cfg.momentum * v.b3 + g.b3;
            net.b3 -= cfg.lr * v.b3;
        }
    }
    fit.train_rmse = rmse(net, pairs, train);
    fit.validation_rmse = val.empty() ? fit.train_rmse : rmse(net, pairs, val);
    return fit;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ShapeMismatch("spearman needs two equal-length series of >= 2");
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[idx[t]] = mean_rank;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<TrainingPair> load_pairs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::vector<TrainingPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 2) throw ParseError(lineno, "expected bits followed by an accuracy");
        TrainingPair p;
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
            if (cells[i] != "0" && cells[i] != "1") throw ParseError(lineno, "bit '" + cells[i] + "' is not 0 or 1");
            p.encoding.bits.push_back(cells[i] == "1" ? 1 : 0);
        }
        try {
            p.accuracy = std::stod(cells.back());
        } catch (const std::exception&) {
            throw ParseError(lineno, "malformed accuracy '" + cells.back() + "'");
        }
        out.push_back(std::move(p));
    }
    return out;
}

void save_pairs_csv(std::span<const TrainingPair> pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.precision(17);
    for (const auto& p : pairs) out << p.encoding.to_csv_row() << ',' << p.accuracy << '\n';
}

void save_predictor(const std::string& path, const PredictorNet& net, const std::string& provenance) {
    Blob blob;
    blob.header = {{"kind", "predictor"},
                   {"inputs", net.inputs},
                   {"hidden", net.hidden},
                   {"target_shift", net.target_shift},
                   {"target_scale", net.target_scale}};
    if (!provenance.empty()) blob.header["provenance"] = provenance;
    auto add = [&blob](std::string name, std::vector<int> shape, const std::vector<double>& v) {
        blob.tensors.push_back({std::move(name), std::move(shape), std::vector<float>(v.begin(), v.end())});
    };
    add("fc1.weight", {net.hidden, net.inputs}, net.w1);
    add("fc1.bias", {net.hidden}, net.b1);
    add("fc2.weight", {net.hidden, net.hidden}, net.w2);
    add("fc2.bias", {net.hidden}, net.b2);
    add("fc3.weight", {1, net.hidden}, net.w3);
    add("fc3.bias", {1}, {net.b3});
    write_blob(path, blob);
}

PredictorNet load_predictor(const std::string& path) {
    const Blob blob = read_blob(path);
    PredictorNet n;
    try {
        if (blob.header.at("kind") != "predictor") throw CheckpointError("'" + path + "' is not a predictor checkpoint");
        n.inputs = blob.header.at("inputs").get<int>();
        n.hidden = blob.header.at("hidden").get<int>();
        n.target_shift = blob.header.at("target_shift").get<double>();
        n.target_scale = blob.header.at("target_scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed predictor header: ") + e.what());
    }
    const std::vector<std::pair<std::string, std::vector<int>>> want{
        {"fc1.weight", {n.hidden, n.inputs}}, {"fc1.bias", {n.hidden}}, {"fc2.weight", {n.hidden, n.hidden}},
        {"fc2.bias", {n.hidden}},             {"fc3.weight", {1, n.hidden}}, {"fc3.bias", {1}}};
    if (blob.tensors.size() != want.size()) throw CheckpointError("predictor checkpoint has the wrong tensor count");
    for (std::size_t i = 0; i < want.size(); ++i)
        if (blob.tensors[i].name != want[i].first || blob.tensors[i].shape != want[i].second)
            throw CheckpointError("predictor tensor '" + blob.tensors[i].name + "' does not match the header");
    auto get = [&blob](std::size_t i) { return std::vector<double>(blob.tensors[i].values.begin(), blob.tensors[i].values.end()); };
    n.w1 = get(0);
    n.b1 = get(1);
    n.w2 = get(2);
    n.b2 = get(3);
    n.w3 = get(4);
    n.b3 = static_cast<double>(blob.tensors[5].values[0]);
    return n;
}

}  // namespace cnas
