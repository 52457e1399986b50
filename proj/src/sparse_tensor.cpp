#include "pidlft/sparse_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

#include "pidlft/model.hpp"
#include "pidlft/rng.hpp"
#include "text_util.hpp"

namespace pidlft {

namespace {

struct TripleHash {
    std::size_t operator()(const std::tuple<Index, Index, Index>& t) const {
        std::size_t h = std::hash<Index>{}(std::get<0>(t));
        h = h * 1000003u ^ std::hash<Index>{}(std::get<1>(t));
        h = h * 1000003u ^ std::hash<Index>{}(std::get<2>(t));
        return h;
    }
};

bool parse_index(const std::string& s, Index& out) {
    const std::string t = detail::trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) return false;
    out = static_cast<Index>(v);
    return true;
}

bool parse_value(const std::string& s, double& out) {
    const std::string t = detail::trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

// Writer header of the form `# shape: I,J,K`.
bool parse_shape_header(const std::string& line, TensorShape& shape) {
    const std::string t = detail::trim(line);
    const std::string tag = "# shape:";
    if (t.rfind(tag, 0) != 0) return false;
    const auto fields = detail::split_fields(t.substr(tag.size()), ',');
    if (fields.size() != 3) return false;
    Index dims[3];
    for (int d = 0; d < 3; ++d) {
        if (!parse_index(fields[d], dims[d])) return false;
    }
    shape = TensorShape{dims[0], dims[1], dims[2]};
    return true;
}

}  // namespace

void TensorShape::validate() const {
    if (n_stations < 1 || n_metrics < 1 || n_slots < 1) {
        throw std::invalid_argument("tensor shape: all dimensions must be >= 1, got (" +
                                    std::to_string(n_stations) + "," + std::to_string(n_metrics) +
                                    "," + std::to_string(n_slots) + ")");
    }
}

SparseTensor::SparseTensor(TensorShape shape, std::vector<Entry> entries)
    : shape_(shape), entries_(std::move(entries)) {
    shape_.validate();
    if (entries_.empty()) {
        throw std::invalid_argument("sparse tensor: no entries");
    }
    std::unordered_set<std::tuple<Index, Index, Index>, TripleHash> seen;
    seen.reserve(entries_.size());
    for (const Entry& e : entries_) {
        if (!shape_.contains(e.i, e.j, e.k)) {
            throw std::out_of_range("sparse tensor: entry (" + std::to_string(e.i) + "," +
                                    std::to_string(e.j) + "," + std::to_string(e.k) +
                                    ") outside shape (" + std::to_string(shape_.n_stations) + "," +
                                    std::to_string(shape_.n_metrics) + "," +
                                    std::to_string(shape_.n_slots) + ")");
        }
        if (!std::isfinite(e.value)) {
            throw std::invalid_argument("sparse tensor: non-finite value at (" +
                                        std::to_string(e.i) + "," + std::to_string(e.j) + "," +
                                        std::to_string(e.k) + ")");
        }
        if (!seen.insert({e.i, e.j, e.k}).second) {
            throw std::invalid_argument("sparse tensor: duplicate entry (" + std::to_string(e.i) +
                                        "," + std::to_string(e.j) + "," + std::to_string(e.k) +
                                        ")");
        }
    }
}

SparseTensor load_coo(std::istream& in, std::optional<TensorShape> shape_hint) {
    std::vector<Entry> entries;
    std::optional<TensorShape> file_hint;
    std::string line;
    long line_no = 0;
    bool first_record_line = true;
    Index max_i = -1, max_j = -1, max_k = -1;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;

        const auto fields = detail::split_fields(stripped, ',');
        Index i;
        if (first_record_line && (fields.empty() || !parse_index(fields[0], i))) {
            // Header line; pick up the shape if the writer recorded one.
            TensorShape s;
            if (parse_shape_header(stripped, s)) file_hint = s;
            first_record_line = false;
            continue;
        }
        first_record_line = false;

        Index j, k;
        double value;
        if (fields.size() != 4 || !parse_index(fields[0], i) || !parse_index(fields[1], j) ||
            !parse_index(fields[2], k) || !parse_value(fields[3], value)) {
            throw std::runtime_error("load_coo: line " + std::to_string(line_no) +
                                     ": malformed record '" + stripped + "'");
        }
        if (i < 0 || j < 0 || k < 0) {
            throw std::runtime_error("load_coo: line " + std::to_string(line_no) +
                                     ": negative index");
        }
        max_i = std::max(max_i, i);
        max_j = std::max(max_j, j);
        max_k = std::max(max_k, k);
        entries.push_back(Entry{i, j, k, value});
    }

    if (entries.empty()) {
        throw std::runtime_error("load_coo: no entries");
    }
    TensorShape shape;
    if (shape_hint) {
        shape = *shape_hint;
    } else if (file_hint) {
        shape = *file_hint;
    } else {
        shape = TensorShape{max_i + 1, max_j + 1, max_k + 1};
    }
    return SparseTensor(shape, std::move(entries));
}

SparseTensor load_coo_file(const std::string& path, std::optional<TensorShape> shape_hint) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_coo: cannot open '" + path + "'");
    }
    return load_coo(in, shape_hint);
}

void save_coo(const SparseTensor& t, std::ostream& out) {
    const TensorShape& s = t.shape();
    out << "# shape: " << s.n_stations << "," << s.n_metrics << "," << s.n_slots << "\n";
    for (const Entry& e : t.entries()) {
        out << e.i << "," << e.j << "," << e.k << "," << detail::fmt_g17(e.value) << "\n";
    }
}

void save_coo_file(const SparseTensor& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_coo: cannot open '" + path + "'");
    }
    save_coo(t, out);
}

double density(const SparseTensor& t) {
    return static_cast<double>(t.size()) / static_cast<double>(t.shape().cell_count());
}

SplitResult split(const SparseTensor& t, SplitRatios ratios, std::uint64_t seed) {
    if (!(ratios.train > 0.0) || !(ratios.val > 0.0) || !(ratios.test > 0.0)) {
        throw std::invalid_argument("split: all ratios must be > 0");
    }
    const std::size_t n = t.size();
    if (n < 3) {
        throw std::invalid_argument("split: need at least 3 entries, got " + std::to_string(n));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(seed);
    fisher_yates(order, rng);

    const double total = ratios.train + ratios.val + ratios.test;
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(ratios.train / total * static_cast<double>(n)));
    const std::size_t n_val =
        static_cast<std::size_t>(std::floor(ratios.val / total * static_cast<double>(n)));
    const std::size_t n_test = n - n_train - n_val;
    if (n_train == 0 || n_val == 0 || n_test == 0) {
        throw std::invalid_argument("split: ratios produce an empty part for " +
                                    std::to_string(n) + " entries");
    }

    const auto& src = t.entries();
    auto take = [&](std::size_t begin, std::size_t count) {
        std::vector<Entry> part;
        part.reserve(count);
        for (std::size_t p = begin; p < begin + count; ++p) {
            part.push_back(src[order[p]]);
        }
        return SparseTensor(t.shape(), std::move(part));
    };
    return SplitResult{take(0, n_train), take(n_train, n_val), take(n_train + n_val, n_test)};
}

SparseTensor synth_lowrank(TensorShape shape, int rank, double density, double noise_sd,
                           std::uint64_t seed, Model* ground_truth) {
    shape.validate();
    if (rank < 1) {
        throw std::invalid_argument("synth_lowrank: rank must be >= 1");
    }
    if (!(density > 0.0) || density > 1.0) {
        throw std::invalid_argument("synth_lowrank: density must be in (0, 1]");
    }
    if (noise_sd < 0.0) {
        throw std::invalid_argument("synth_lowrank: noise_sd must be >= 0");
    }
    const Index cells = shape.cell_count();
    const auto n_sample = static_cast<Index>(std::floor(density * static_cast<double>(cells)));
    if (n_sample < 1) {
        throw std::invalid_argument("synth_lowrank: density * cells < 1, nothing to sample");
    }

    // Draw order is fixed: factors S, M, T row-major on [0.2, 0.8), biases
    // a, b, c on [0, 0.4), then the cell sample, then one Gaussian per kept
    // cell (skipped entirely when noise_sd == 0).
    SplitMix64 rng(seed);
    Model truth(shape, rank);
    for (double& v : truth.S) v = rng.next_uniform(0.2, 0.8);
    for (double& v : truth.M) v = rng.next_uniform(0.2, 0.8);
    for (double& v : truth.T) v = rng.next_uniform(0.2, 0.8);
    for (double& v : truth.a) v = rng.next_uniform(0.0, 0.4);
    for (double& v : truth.b) v = rng.next_uniform(0.0, 0.4);
    for (double& v : truth.c) v = rng.next_uniform(0.0, 0.4);

    std::vector<Index> cell_ids(static_cast<std::size_t>(cells));
    std::iota(cell_ids.begin(), cell_ids.end(), Index{0});
    fisher_yates(cell_ids, rng);
    cell_ids.resize(static_cast<std::size_t>(n_sample));
    std::sort(cell_ids.begin(), cell_ids.end());

    std::vector<Entry> entries;
    entries.reserve(cell_ids.size());
    for (const Index id : cell_ids) {
        const Index i = id / (shape.n_metrics * shape.n_slots);
        const Index j = (id / shape.n_slots) % shape.n_metrics;
        const Index k = id % shape.n_slots;
        double y = truth.predict(i, j, k);
        if (noise_sd > 0.0) y += noise_sd * rng.next_gaussian();
        entries.push_back(Entry{i, j, k, y});
    }

    if (ground_truth != nullptr) *ground_truth = std::move(truth);
    return SparseTensor(shape, std::move(entries));
}

}  // namespace pidlft
