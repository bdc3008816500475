#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace cnas {

using BigInt = boost::multiprecision::cpp_int;
using Rng = std::mt19937_64;

// Level sets of the three elastic block dimensions. Each list is strictly
// ascending; widths are channel expansion ratios.
struct DimensionLevels {
    std::vector<int> depths;
    std::vector<double> widths;
    std::vector<int> kernels;

    bool operator==(const DimensionLevels&) const = default;
};

enum class Coupling { Independent, Compound };

class KernelMode {
public:
    static KernelMode elastic() { return KernelMode{}; }
    static KernelMode fixed(int k) { return KernelMode{k}; }

    bool is_fixed() const { return fixed_.has_value(); }
    int fixed_kernel() const { return *fixed_; }

    bool operator==(const KernelMode&) const = default;

private:
    KernelMode() = default;
    explicit KernelMode(int k) : fixed_(k) {}
    std::optional<int> fixed_;
};

struct SearchSpaceDef {
    int blocks = 1;
    DimensionLevels levels;
    Coupling coupling = Coupling::Compound;
    KernelMode kernel_mode = KernelMode::elastic();
    std::vector<int> resolutions;

    bool operator==(const SearchSpaceDef&) const = default;

    // Throws InvalidSpace when a type invariant is broken.
    void check() const;

    int max_depth() const { return levels.depths.back(); }
    double max_width() const { return levels.widths.back(); }
    // Largest kernel a subnetwork of this space may use.
    int max_kernel() const;
    int max_resolution() const { return resolutions.back(); }
    // Kernel values legal for a layer (the single fixed value under Fixed).
    std::vector<int> legal_kernels() const;
};

struct BlockConfig {
    int depth = 0;
    std::vector<double> widths;
    std::vector<int> kernels;

    bool operator==(const BlockConfig&) const = default;
};

struct ArchSpec {
    std::vector<BlockConfig> blocks;
    int resolution = 0;

    bool operator==(const ArchSpec&) const = default;
};

// Fixed-length 0/1 vector; see encode() for the segment layout.
struct ArchEncoding {
    std::vector<std::uint8_t> bits;

    bool operator==(const ArchEncoding&) const = default;
    std::string to_string() const;  // "0101..."
    std::string to_csv_row() const;  // "0,1,0,1"
    static ArchEncoding from_string(const std::string& s);
};

// Restricts sampling to a subset of each dimension's levels (by index).
// Used by training phases that unlock levels progressively.
struct LevelMask {
    std::vector<bool> depths;
    std::vector<bool> widths;
    std::vector<bool> kernels;

    static LevelMask all(const SearchSpaceDef& space);
};

enum class SamplingMode {
    // Every legal block configuration is equally likely.
    PerConfiguration,
    // Depth level drawn uniformly, then per-layer levels uniformly.
    DepthStratified,
};

// ---- presets ----------------------------------------------------------

// D=[2,3,4], W=[3,4,6], K=[3,5,7], independent dimensions, elastic kernel.
SearchSpaceDef ofa_space();
// Same levels under compound coupling with a fixed kernel of 5.
SearchSpaceDef compound_fixed_space(int kernel = 5);
// Same levels under compound coupling with elastic kernels.
SearchSpaceDef compound_elastic_space();
// Looks up "ofa", "compofa-fixed", "compofa-elastic", and the desk-scale
// "toy-compound" / "toy-independent" (kernel fixed at 3, 32 px only).
// Throws ConfigError.
SearchSpaceDef space_preset(const std::string& name);

// ---- operations -------------------------------------------------------

// Width paired with `depth` under compound coupling.
double couple_level(const DimensionLevels& levels, int depth);

// Exact number of distinct architectures, resolution excluded.
BigInt cardinality(const SearchSpaceDef& space);

// Number of legal configurations of one block, optionally masked.
BigInt block_cardinality(const SearchSpaceDef& space, const LevelMask* mask = nullptr);

ArchSpec sample_uniform(const SearchSpaceDef& space, Rng& rng,
                        SamplingMode mode = SamplingMode::PerConfiguration,
                        const LevelMask* mask = nullptr);
ArchSpec sample_uniform(const SearchSpaceDef& space, std::uint64_t seed,
                        SamplingMode mode = SamplingMode::PerConfiguration);

BlockConfig sample_block(const SearchSpaceDef& space, Rng& rng,
                         SamplingMode mode = SamplingMode::PerConfiguration,
                         const LevelMask* mask = nullptr);

// Calls `visit` for every architecture in lexicographic order (block 0
// slowest; per block: depth index, then width indices, then kernel indices).
// Resolution is fixed to the largest one. Throws SpaceTooLarge when
// cardinality exceeds `limit`.
void for_each_arch(const SearchSpaceDef& space, std::uint64_t limit,
                   const std::function<void(const ArchSpec&)>& visit);
std::vector<ArchSpec> enumerate(const SearchSpaceDef& space, std::uint64_t limit);

// Every legal configuration of one block in enumeration order.
std::vector<BlockConfig> enumerate_blocks(const SearchSpaceDef& space, std::uint64_t limit);

bool validate(const SearchSpaceDef& space, const ArchSpec& arch);
bool validate_block(const SearchSpaceDef& space, const BlockConfig& block);

std::size_t encoding_length(const SearchSpaceDef& space);
// Layout per block: depth one-hot; under Independent coupling one width
// one-hot per layer slot; under Elastic kernel one kernel one-hot per layer
// slot. Slots beyond the block depth are all zero. Resolution one-hot last.
ArchEncoding encode(const SearchSpaceDef& space, const ArchSpec& arch);
ArchSpec decode(const SearchSpaceDef& space, const ArchEncoding& enc);

ArchSpec mutate(const SearchSpaceDef& space, const ArchSpec& arch, double p_mut, Rng& rng);
ArchSpec crossover(const SearchSpaceDef& space, const ArchSpec& a, const ArchSpec& b, Rng& rng);

ArchSpec max_arch(const SearchSpaceDef& space);
ArchSpec min_arch(const SearchSpaceDef& space);
// Every block at the median level of each dimension (paired width under
// Compound coupling); resolution is the median one.
ArchSpec median_arch(const SearchSpaceDef& space);
// All blocks at depth level `d` and width level `w` (indices), with the
// smallest legal kernel. Valid under Independent rules; under Compound only
// when d == w.
ArchSpec uniform_arch(const SearchSpaceDef& space, std::size_t depth_index,
                      std::size_t width_index, int resolution);

// Ordering consistent with enumeration order; resolution compared last.
std::strong_ordering compare_archs(const SearchSpaceDef& space, const ArchSpec& a,
                                   const ArchSpec& b);

// Same levels and kernel mode with the coupling constraint dropped.
SearchSpaceDef independent_relaxation(const SearchSpaceDef& space);

std::size_t depth_index(const SearchSpaceDef& space, int depth);
std::size_t width_index(const SearchSpaceDef& space, double width);
std::size_t kernel_index(const SearchSpaceDef& space, int kernel);

// ---- serialization ----------------------------------------------------

nlohmann::json to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SearchSpaceDef& space);
SearchSpaceDef space_from_json(const nlohmann::json& j);

}  // namespace cnas
