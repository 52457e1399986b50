#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pidlft {

using Index = std::int64_t;

class Model;

// Dimensions of a three-mode tensor: stations x metrics x time slots.
struct TensorShape {
    Index n_stations = 0;
    Index n_metrics = 0;
    Index n_slots = 0;

    Index cell_count() const { return n_stations * n_metrics * n_slots; }
    bool contains(Index i, Index j, Index k) const {
        return i >= 0 && i < n_stations && j >= 0 && j < n_metrics && k >= 0 && k < n_slots;
    }
    void validate() const;  // throws if any dimension < 1

    friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

// One observed cell.
struct Entry {
    Index i = 0;
    Index j = 0;
    Index k = 0;
    double value = 0.0;

    friend bool operator==(const Entry&, const Entry&) = default;
};

// Immutable COO store of observed entries. Construction enforces:
// in-bounds indices, finite values, no duplicate (i,j,k), at least one entry.
class SparseTensor {
public:
    SparseTensor(TensorShape shape, std::vector<Entry> entries);

    const TensorShape& shape() const { return shape_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    TensorShape shape_;
    std::vector<Entry> entries_;
};

// Text COO format: one `i,j,k,value` record per line, optional single header
// line (detected by a non-numeric first field). The writer emits a
// `# shape: I,J,K` header so files round-trip with their full shape; an
// explicit shape_hint takes precedence over the header.
SparseTensor load_coo(std::istream& in, std::optional<TensorShape> shape_hint = {});
SparseTensor load_coo_file(const std::string& path, std::optional<TensorShape> shape_hint = {});
void save_coo(const SparseTensor& t, std::ostream& out);
void save_coo_file(const SparseTensor& t, const std::string& path);

// Fraction of observed cells, in (0, 1].
double density(const SparseTensor& t);

struct SplitRatios {
    double train = 2.0;
    double val = 2.0;
    double test = 6.0;
};

struct SplitResult {
    SparseTensor train;
    SparseTensor val;
    SparseTensor test;
};

// Seeded partition into train/val/test. Entries are permuted by a
// Fisher-Yates shuffle driven by SplitMix64(seed), then cut into contiguous
// blocks of floor(r_train*n) and floor(r_val*n) entries, remainder to test.
SplitResult split(const SparseTensor& t, SplitRatios ratios, std::uint64_t seed);

// Synthetic low-rank data: a seeded ground-truth factorization (uniform
// factors and biases) reconstructed over floor(density * cells) cells sampled
// without replacement, plus Gaussian noise of the given standard deviation.
// When ground_truth is non-null it receives the generating model, so tests
// can bound the achievable reconstruction error.
SparseTensor synth_lowrank(TensorShape shape, int rank, double density, double noise_sd,
                           std::uint64_t seed, Model* ground_truth = nullptr);

}  // namespace pidlft
