#include "cnas/arch_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cnas/errors.hpp"

namespace cnas {

namespace {

template <typename T>
bool strictly_ascending(const std::vector<T>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i - 1] < v[i])) return false;
    return true;
}

bool same_width(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

std::optional<std::size_t> find_width(const std::vector<double>& widths, double w) {
    for (std::size_t i = 0; i < widths.size(); ++i)
        if (same_width(widths[i], w)) return i;
    return std::nullopt;
}

template <typename T>
std::optional<std::size_t> find_exact(const std::vector<T>& v, T x) {
    auto it = std::find(v.begin(), v.end(), x);
    if (it == v.end()) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
}

// Indices of allowed kernel values within legal_kernels().
std::vector<int> allowed_kernels(const SearchSpaceDef& space, const LevelMask* mask) {
    if (space.kernel_mode.is_fixed()) return {space.kernel_mode.fixed_kernel()};
    std::vector<int> out;
    for (std::size_t i = 0; i < space.levels.kernels.size(); ++i)
        if (!mask || mask->kernels[i]) out.push_back(space.levels.kernels[i]);
    return out;
}

std::vector<double> allowed_widths(const SearchSpaceDef& space, const LevelMask* mask) {
    std::vector<double> out;
    for (std::size_t i = 0; i < space.levels.widths.size(); ++i)
        if (!mask || mask->widths[i]) out.push_back(space.levels.widths[i]);
    return out;
}

// Depth indices that admit at least one configuration under the mask.
std::vector<std::size_t> allowed_depth_indices(const SearchSpaceDef& space, const LevelMask* mask) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < space.levels.depths.size(); ++i) {
        if (mask && !mask->depths[i]) continue;
        if (space.coupling == Coupling::Compound && mask && !mask->widths[i]) continue;
        out.push_back(i);
    }
    return out;
}

// Per-depth configuration count: compound kc^d, independent (wc*kc)^d.
BigInt configs_at_depth(const SearchSpaceDef& space, int depth, std::size_t wc, std::size_t kc) {
    BigInt per_layer = space.coupling == Coupling::Compound ? BigInt(kc) : BigInt(wc) * BigInt(kc);
    return boost::multiprecision::pow(per_layer, static_cast<unsigned>(depth));
}

template <typename T>
std::vector<std::vector<T>> all_tuples(const std::vector<T>& values, int length) {
    std::vector<std::vector<T>> out;
    std::vector<std::size_t> idx(static_cast<std::size_t>(length), 0);
    if (values.empty()) return out;
    while (true) {
        std::vector<T> t(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) t[i] = values[idx[i]];
        out.push_back(std::move(t));
        // Last position varies fastest, so the first layer is slowest.
        int pos = length - 1;
        while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == values.size()) {
            idx[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

std::strong_ordering compare_blocks(const SearchSpaceDef& space, const BlockConfig& a, const BlockConfig& b) {
    if (auto c = depth_index(space, a.depth) <=> depth_index(space, b.depth); c != 0) return c;
    for (std::size_t i = 0; i < a.widths.size(); ++i)
        if (auto c = width_index(space, a.widths[i]) <=> width_index(space, b.widths[i]); c != 0) return c;
    for (std::size_t i = 0; i < a.kernels.size(); ++i)
        if (auto c = kernel_index(space, a.kernels[i]) <=> kernel_index(space, b.kernels[i]); c != 0) return c;
    return std::strong_ordering::equal;
}

}  // namespace

// ---- SearchSpaceDef ---------------------------------------------------

void SearchSpaceDef::check() const {
    if (blocks < 1) throw InvalidSpace("block count must be >= 1");
    const auto& L = levels;
    if (L.depths.empty() || L.widths.empty() || L.kernels.empty())
        throw InvalidSpace("level lists must be non-empty");
    if (!strictly_ascending(L.depths) || !strictly_ascending(L.widths) || !strictly_ascending(L.kernels))
        throw InvalidSpace("level lists must be strictly ascending");
    if (L.depths.front() < 1) throw InvalidSpace("depths must be positive");
    if (L.widths.front() <= 0.0) throw InvalidSpace("widths must be positive");
    for (int k : L.kernels)
        if (k < 1 || k % 2 == 0) throw InvalidSpace("kernels must be odd and positive");
    if (coupling == Coupling::Compound && L.depths.size() != L.widths.size())
        throw InvalidSpace("compound coupling needs |depths| == |widths|");
    if (kernel_mode.is_fixed() && !find_exact(L.kernels, kernel_mode.fixed_kernel()))
        throw InvalidSpace("fixed kernel must be one of the kernel levels");
    if (resolutions.empty()) throw InvalidSpace("resolutions must be non-empty");
    if (!strictly_ascending(resolutions) || resolutions.front() < 1)
        throw InvalidSpace("resolutions must be positive and strictly ascending");
}

int SearchSpaceDef::max_kernel() const {
    return kernel_mode.is_fixed() ? kernel_mode.fixed_kernel() : levels.kernels.back();
}

std::vector<int> SearchSpaceDef::legal_kernels() const {
    if (kernel_mode.is_fixed()) return {kernel_mode.fixed_kernel()};
    return levels.kernels;
}

LevelMask LevelMask::all(const SearchSpaceDef& space) {
    return LevelMask{std::vector<bool>(space.levels.depths.size(), true),
                     std::vector<bool>(space.levels.widths.size(), true),
                     std::vector<bool>(space.levels.kernels.size(), true)};
}

// ---- ArchEncoding -----------------------------------------------------

std::string ArchEncoding::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

std::string ArchEncoding::to_csv_row() const {
    std::string s;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (i) s.push_back(',');
        s.push_back(bits[i] ? '1' : '0');
    }
    return s;
}

ArchEncoding ArchEncoding::from_string(const std::string& s) {
    ArchEncoding e;
    for (char c : s) {
        if (c != '0' && c != '1') throw MalformedEncoding("encoding string must contain only 0/1");
        e.bits.push_back(c == '1');
    }
    return e;
}

// ---- presets ----------------------------------------------------------

SearchSpaceDef ofa_space() {
    SearchSpaceDef s;
    s.blocks = 5;
    s.levels = {{2, 3, 4}, {3.0, 4.0, 6.0}, {3, 5, 7}};
    s.coupling = Coupling::Independent;
    s.kernel_mode = KernelMode::elastic();
    s.resolutions = {128, 160, 192, 224};
    return s;
}

SearchSpaceDef compound_fixed_space(int kernel) {
    SearchSpaceDef s = ofa_space();
    s.coupling = Coupling::Compound;
    s.kernel_mode = KernelMode::fixed(kernel);
    s.check();
    return s;
}

SearchSpaceDef compound_elastic_space() {
    SearchSpaceDef s = ofa_space();
    s.coupling = Coupling::Compound;
    return s;
}

SearchSpaceDef space_preset(const std::string& name) {
    if (name == "ofa") return ofa_space();
    if (name == "compofa-fixed") return compound_fixed_space();
    if (name == "compofa-elastic") return compound_elastic_space();
    if (name == "toy-compound" || name == "toy-independent") {
        SearchSpaceDef t = ofa_space();
        t.coupling = name == "toy-compound" ? Coupling::Compound : Coupling::Independent;
        t.kernel_mode = KernelMode::fixed(3);
        t.resolutions = {32};
        return t;
    }
    throw ConfigError("unknown space preset '" + name + "'");
}

// ---- level lookup -----------------------------------------------------

std::size_t depth_index(const SearchSpaceDef& space, int depth) {
    auto i = find_exact(space.levels.depths, depth);
    if (!i) throw UnknownLevel("depth " + std::to_string(depth) + " is not a level");
    return *i;
}

std::size_t width_index(const SearchSpaceDef& space, double width) {
    auto i = find_width(space.levels.widths, width);
    if (!i) throw UnknownLevel("width " + std::to_string(width) + " is not a level");
    return *i;
}

std::size_t kernel_index(const SearchSpaceDef& space, int kernel) {
    auto i = find_exact(space.levels.kernels, kernel);
    if (!i) throw UnknownLevel("kernel " + std::to_string(kernel) + " is not a level");
    return *i;
}

double couple_level(const DimensionLevels& levels, int depth) {
    if (levels.depths.size() != levels.widths.size())
        throw InvalidSpace("coupling needs |depths| == |widths|");
    auto i = find_exact(levels.depths, depth);
    if (!i) throw UnknownLevel("depth " + std::to_string(depth) + " is not a level");
    return levels.widths[*i];
}

// ---- cardinality ------------------------------------------------------

BigInt block_cardinality(const SearchSpaceDef& space, const LevelMask* mask) {
    const std::size_t wc = allowed_widths(space, mask).size();
    const std::size_t kc = allowed_kernels(space, mask).size();
    BigInt total = 0;
    for (std::size_t i : allowed_depth_indices(space, mask))
        total += configs_at_depth(space, space.levels.depths[i], wc, kc);
    return total;
}

BigInt cardinality(const SearchSpaceDef& space) {
    space.check();
    return boost::multiprecision::pow(block_cardinality(space), static_cast<unsigned>(space.blocks));
}

// ---- sampling ---------------------------------------------------------

BlockConfig sample_block(const SearchSpaceDef& space, Rng& rng, SamplingMode mode, const LevelMask* mask) {
    const auto depths = allowed_depth_indices(space, mask);
    const auto widths = allowed_widths(space, mask);
    const auto kernels = allowed_kernels(space, mask);
    if (depths.empty() || widths.empty() || kernels.empty())
        throw InvalidSpace("level mask leaves no legal block configuration");

    std::size_t di = 0;
    if (mode == SamplingMode::PerConfiguration && depths.size() > 1) {
        std::vector<double> weights;
        for (std::size_t i : depths)
            weights.push_back(configs_at_depth(space, space.levels.depths[i], widths.size(), kernels.size())
                                  .convert_to<double>());
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        di = depths[pick(rng)];
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, depths.size() - 1);
        di = depths[pick(rng)];
    }

    BlockConfig b;
    b.depth = space.levels.depths[di];
    std::uniform_int_distribution<std::size_t> pick_w(0, widths.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_k(0, kernels.size() - 1);
    for (int l = 0; l < b.depth; ++l) {
        b.widths.push_back(space.coupling == Coupling::Compound ? space.levels.widths[di] : widths[pick_w(rng)]);
        b.kernels.push_back(kernels.size() == 1 ? kernels[0] : kernels[pick_k(rng)]);
    }
    return b;
}

ArchSpec sample_uniform(const SearchSpaceDef& space, Rng& rng, SamplingMode mode, const LevelMask* mask) {
    ArchSpec a;
    a.blocks.reserve(static_cast<std::size_t>(space.blocks));
    for (int i = 0; i < space.blocks; ++i) a.blocks.push_back(sample_block(space, rng, mode, mask));
    std::uniform_int_distribution<std::size_t> pick_r(0, space.resolutions.size() - 1);
    a.resolution = space.resolutions[pick_r(rng)];
    return a;
}

ArchSpec sample_uniform(const SearchSpaceDef& space, std::uint64_t seed, SamplingMode mode) {
    Rng rng(seed);
    return sample_uniform(space, rng, mode);
}

// ---- enumeration ------------------------------------------------------

std::vector<BlockConfig> enumerate_blocks(const SearchSpaceDef& space, std::uint64_t limit) {
    if (block_cardinality(space) > limit) throw SpaceTooLarge("block configurations exceed limit");
    std::vector<BlockConfig> out;
    const auto kernels = space.legal_kernels();
    for (std::size_t di = 0; di < space.levels.depths.size(); ++di) {
        const int d = space.levels.depths[di];
        std::vector<std::vector<double>> width_tuples;
        if (space.coupling == Coupling::Compound)
            width_tuples.emplace_back(static_cast<std::size_t>(d), space.levels.widths[di]);
        else
            width_tuples = all_tuples(space.levels.widths, d);
        const auto kernel_tuples = all_tuples(kernels, d);
        for (const auto& w : width_tuples)
            for (const auto& k : kernel_tuples) out.push_back(BlockConfig{d, w, k});
    }
    return out;
}

void for_each_arch(const SearchSpaceDef& space, std::uint64_t limit,
                   const std::function<void(const ArchSpec&)>& visit) {
    const BigInt card = cardinality(space);
    if (card > limit)
        throw SpaceTooLarge("space has " + card.str() + " architectures, limit is " + std::to_string(limit));
    const auto configs = enumerate_blocks(space, limit);
    const auto m = static_cast<std::size_t>(space.blocks);
    std::vector<std::size_t> idx(m, 0);
    ArchSpec a;
    a.resolution = space.max_resolution();
    a.blocks.assign(m, configs[0]);
    while (true) {
        for (std::size_t i = 0; i < m; ++i) a.blocks[i] = configs[idx[i]];
        visit(a);
        std::size_t pos = m;
        while (pos > 0) {
            --pos;
            if (++idx[pos] < configs.size()) break;
            idx[pos] = 0;
            if (pos == 0) return;
        }
    }
}

std::vector<ArchSpec> enumerate(const SearchSpaceDef& space, std::uint64_t limit) {
    std::vector<ArchSpec> out;
    for_each_arch(space, limit, [&](const ArchSpec& a) { out.push_back(a); });
    return out;
}

// ---- validation -------------------------------------------------------

bool validate_block(const SearchSpaceDef& space, const BlockConfig& b) {
    auto di = find_exact(space.levels.depths, b.depth);
    if (!di) return false;
    const auto d = static_cast<std::size_t>(b.depth);
    if (b.widths.size() != d || b.kernels.size() != d) return false;
    const auto kernels = space.legal_kernels();
    for (std::size_t l = 0; l < d; ++l) {
        if (!find_width(space.levels.widths, b.widths[l])) return false;
        if (!find_exact(kernels, b.kernels[l])) return false;
        if (space.coupling == Coupling::Compound && !same_width(b.widths[l], space.levels.widths[*di]))
            return false;
    }
    return true;
}

bool validate(const SearchSpaceDef& space, const ArchSpec& arch) {
    if (arch.blocks.size() != static_cast<std::size_t>(space.blocks)) return false;
    if (!find_exact(space.resolutions, arch.resolution)) return false;
    return std::all_of(arch.blocks.begin(), arch.blocks.end(),
                       [&](const BlockConfig& b) { return validate_block(space, b); });
}

// ---- encoding ---------------------------------------------------------

namespace {

struct SegmentLayout {
    std::size_t depth, width_slots, kernel_slots, per_block;
};

SegmentLayout layout_of(const SearchSpaceDef& space) {
    SegmentLayout s{};
    const auto slots = static_cast<std::size_t>(space.max_depth());
    s.depth = space.levels.depths.size();
    s.width_slots = space.coupling == Coupling::Independent ? slots : 0;
    s.kernel_slots = space.kernel_mode.is_fixed() ? 0 : slots;
    s.per_block = s.depth + s.width_slots * space.levels.widths.size() +
                  s.kernel_slots * space.levels.kernels.size();
    return s;
}

// Returns the hot index of an all-0/1 segment, nullopt when all zero.
std::optional<std::size_t> read_one_hot(const std::vector<std::uint8_t>& bits, std::size_t off, std::size_t size) {
    std::optional<std::size_t> hot;
    for (std::size_t i = 0; i < size; ++i) {
        const auto b = bits[off + i];
        if (b > 1) throw MalformedEncoding("bit values must be 0 or 1");
        if (b == 1) {
            if (hot) throw MalformedEncoding("segment has more than one hot bit");
            hot = i;
        }
    }
    return hot;
}

}  // namespace

std::size_t encoding_length(const SearchSpaceDef& space) {
    return layout_of(space).per_block * static_cast<std::size_t>(space.blocks) + space.resolutions.size();
}

ArchEncoding encode(const SearchSpaceDef& space, const ArchSpec& arch) {
    if (!validate(space, arch)) throw InvalidArch("cannot encode an architecture invalid for the space");
    const auto L = layout_of(space);
    const std::size_t nw = space.levels.widths.size(), nk = space.levels.kernels.size();
    ArchEncoding e;
    e.bits.assign(encoding_length(space), 0);
    std::size_t off = 0;
    for (const auto& b : arch.blocks) {
        e.bits[off + depth_index(space, b.depth)] = 1;
        off += L.depth;
        for (std::size_t l = 0; l < L.width_slots; ++l, off += nw)
            if (l < b.widths.size()) e.bits[off + width_index(space, b.widths[l])] = 1;
        for (std::size_t l = 0; l < L.kernel_slots; ++l, off += nk)
            if (l < b.kernels.size()) e.bits[off + kernel_index(space, b.kernels[l])] = 1;
    }
    e.bits[off + *find_exact(space.resolutions, arch.resolution)] = 1;
    return e;
}

ArchSpec decode(const SearchSpaceDef& space, const ArchEncoding& enc) {
    if (enc.bits.size() != encoding_length(space)) throw MalformedEncoding("encoding length mismatch");
    const auto L = layout_of(space);
    const std::size_t nw = space.levels.widths.size(), nk = space.levels.kernels.size();
    ArchSpec a;
    std::size_t off = 0;
    for (int bi = 0; bi < space.blocks; ++bi) {
        auto di = read_one_hot(enc.bits, off, L.depth);
        if (!di) throw MalformedEncoding("depth segment is not one-hot");
        off += L.depth;
        BlockConfig b;
        b.depth = space.levels.depths[*di];
        const auto d = static_cast<std::size_t>(b.depth);
        for (std::size_t l = 0; l < L.width_slots; ++l, off += nw) {
            auto wi = read_one_hot(enc.bits, off, nw);
            if (l < d && !wi) throw MalformedEncoding("active width slot is not one-hot");
            if (l >= d && wi) throw MalformedEncoding("inactive width slot is not zero");
            if (wi) b.widths.push_back(space.levels.widths[*wi]);
        }
        if (L.width_slots == 0) b.widths.assign(d, space.levels.widths[*di]);
        for (std::size_t l = 0; l < L.kernel_slots; ++l, off += nk) {
            auto ki = read_one_hot(enc.bits, off, nk);
            if (l < d && !ki) throw MalformedEncoding("active kernel slot is not one-hot");
            if (l >= d && ki) throw MalformedEncoding("inactive kernel slot is not zero");
            if (ki) b.kernels.push_back(space.levels.kernels[*ki]);
        }
        if (L.kernel_slots == 0) b.kernels.assign(d, space.kernel_mode.fixed_kernel());
        a.blocks.push_back(std::move(b));
    }
    auto ri = read_one_hot(enc.bits, off, space.resolutions.size());
    if (!ri) throw MalformedEncoding("resolution segment is not one-hot");
    a.resolution = space.resolutions[*ri];
    return a;
}

// ---- genetic operators ------------------------------------------------

ArchSpec mutate(const SearchSpaceDef& space, const ArchSpec& arch, double p_mut, Rng& rng) {
    std::bernoulli_distribution flip(p_mut);
    ArchSpec out = arch;
    for (auto& b : out.blocks)
        if (flip(rng)) b = sample_block(space, rng);
    if (flip(rng)) {
        std::uniform_int_distribution<std::size_t> pick_r(0, space.resolutions.size() - 1);
        out.resolution = space.resolutions[pick_r(rng)];
    }
    return out;
}

ArchSpec crossover(const SearchSpaceDef& space, const ArchSpec& a, const ArchSpec& b, Rng& rng) {
    (void)space;
    std::bernoulli_distribution coin(0.5);
    ArchSpec out;
    out.blocks.reserve(a.blocks.size());
    for (std::size_t i = 0; i < a.blocks.size(); ++i) out.blocks.push_back(coin(rng) ? b.blocks[i] : a.blocks[i]);
    out.resolution = coin(rng) ? b.resolution : a.resolution;
    return out;
}

// ---- extremes ---------------------------------------------------------

ArchSpec uniform_arch(const SearchSpaceDef& space, std::size_t di, std::size_t wi, int resolution) {
    ArchSpec a;
    const int d = space.levels.depths.at(di);
    BlockConfig b{d, std::vector<double>(static_cast<std::size_t>(d), space.levels.widths.at(wi)),
                  std::vector<int>(static_cast<std::size_t>(d), space.legal_kernels().front())};
    a.blocks.assign(static_cast<std::size_t>(space.blocks), b);
    a.resolution = resolution;
    return a;
}

namespace {

ArchSpec arch_at_level(const SearchSpaceDef& space, std::size_t di, std::size_t wi, std::size_t ki, std::size_t ri) {
    const int d = space.levels.depths[di];
    const auto kernels = space.legal_kernels();
    BlockConfig b{d, std::vector<double>(static_cast<std::size_t>(d), space.levels.widths[wi]),
                  std::vector<int>(static_cast<std::size_t>(d), kernels[std::min(ki, kernels.size() - 1)])};
    ArchSpec a;
    a.blocks.assign(static_cast<std::size_t>(space.blocks), b);
    a.resolution = space.resolutions[ri];
    return a;
}

}  // namespace

ArchSpec max_arch(const SearchSpaceDef& space) {
    return arch_at_level(space, space.levels.depths.size() - 1, space.levels.widths.size() - 1,
                         space.legal_kernels().size() - 1, space.resolutions.size() - 1);
}

ArchSpec min_arch(const SearchSpaceDef& space) { return arch_at_level(space, 0, 0, 0, 0); }

ArchSpec median_arch(const SearchSpaceDef& space) {
    const std::size_t di = space.levels.depths.size() / 2;
    const std::size_t wi = space.coupling == Coupling::Compound ? di : space.levels.widths.size() / 2;
    return arch_at_level(space, di, wi, space.legal_kernels().size() / 2, space.resolutions.size() / 2);
}

std::strong_ordering compare_archs(const SearchSpaceDef& space, const ArchSpec& a, const ArchSpec& b) {
    const std::size_t n = std::min(a.blocks.size(), b.blocks.size());
    for (std::size_t i = 0; i < n; ++i)
        if (auto c = compare_blocks(space, a.blocks[i], b.blocks[i]); c != 0) return c;
    if (auto c = a.blocks.size() <=> b.blocks.size(); c != 0) return c;
    return a.resolution <=> b.resolution;
}

SearchSpaceDef independent_relaxation(const SearchSpaceDef& space) {
    SearchSpaceDef s = space;
    s.coupling = Coupling::Independent;
    return s;
}

// ---- serialization ----------------------------------------------------

nlohmann::json to_json(const ArchSpec& arch) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : arch.blocks) blocks.push_back({{"d", b.depth}, {"w", b.widths}, {"k", b.kernels}});
    return {{"blocks", blocks}, {"r", arch.resolution}};
}

ArchSpec arch_from_json(const nlohmann::json& j) {
    try {
        ArchSpec a;
        for (const auto& jb : j.at("blocks")) {
            BlockConfig b;
            b.depth = jb.at("d").get<int>();
            b.widths = jb.at("w").get<std::vector<double>>();
            b.kernels = jb.at("k").get<std::vector<int>>();
            a.blocks.push_back(std::move(b));
        }
        a.resolution = j.at("r").get<int>();
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed architecture JSON: ") + e.what());
    }
}

nlohmann::json to_json(const SearchSpaceDef& s) {
    nlohmann::json j{{"blocks", s.blocks},
                     {"depths", s.levels.depths},
                     {"widths", s.levels.widths},
                     {"kernels", s.levels.kernels},
                     {"coupling", s.coupling == Coupling::Compound ? "compound" : "independent"},
                     {"resolutions", s.resolutions}};
    if (s.kernel_mode.is_fixed())
        j["kernel_mode"] = {{"fixed", s.kernel_mode.fixed_kernel()}};
    else
        j["kernel_mode"] = "elastic";
    return j;
}

SearchSpaceDef space_from_json(const nlohmann::json& j) {
    try {
        if (j.is_string()) return space_preset(j.get<std::string>());
        SearchSpaceDef s;
        s.blocks = j.at("blocks").get<int>();
        s.levels.depths = j.at("depths").get<std::vector<int>>();
        s.levels.widths = j.at("widths").get<std::vector<double>>();
        s.levels.kernels = j.at("kernels").get<std::vector<int>>();
        const auto coupling = j.at("coupling").get<std::string>();
        if (coupling == "compound")
            s.coupling = Coupling::Compound;
        else if (coupling == "independent")
            s.coupling = Coupling::Independent;
        else
            throw ConfigError("coupling must be 'compound' or 'independent'");
        const auto& km = j.at("kernel_mode");
        if (km.is_string() && km.get<std::string>() == "elastic")
            s.kernel_mode = KernelMode::elastic();
        else if (km.is_object())
            s.kernel_mode = KernelMode::fixed(km.at("fixed").get<int>());
        else
            throw ConfigError("kernel_mode must be \"elastic\" or {\"fixed\": k}");
        s.resolutions = j.at("resolutions").get<std::vector<int>>();
        s.check();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed space JSON: ") + e.what());
    }
}

}  // namespace cnas
