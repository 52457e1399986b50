#include "pidlft/model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "pidlft/rng.hpp"
#include "text_util.hpp"

namespace pidlft {

namespace {
constexpr const char* kMagic = "pidlft-model-v1";
}

void InitScheme::validate() const {
    if (!(low < high)) {
        throw std::invalid_argument("init scheme: low must be < high");
    }
}

Model::Model(TensorShape shape, int rank) : shape_(shape), rank_(rank) {
    shape_.validate();
    if (rank_ < 1) {
        throw std::invalid_argument("model: rank must be >= 1");
    }
    S.assign(static_cast<std::size_t>(shape_.n_stations) * rank_, 0.0);
    M.assign(static_cast<std::size_t>(shape_.n_metrics) * rank_, 0.0);
    T.assign(static_cast<std::size_t>(shape_.n_slots) * rank_, 0.0);
    a.assign(static_cast<std::size_t>(shape_.n_stations), 0.0);
    b.assign(static_cast<std::size_t>(shape_.n_metrics), 0.0);
    c.assign(static_cast<std::size_t>(shape_.n_slots), 0.0);
}

Model Model::init(const TensorShape& shape, int rank, const InitScheme& scheme) {
    scheme.validate();
    Model m(shape, rank);
    // Fill order is part of the determinism contract: S, then M, then T,
    // row-major; biases stay zero.
    SplitMix64 rng(scheme.seed);
    for (double& v : m.S) v = rng.next_uniform(scheme.low, scheme.high);
    for (double& v : m.M) v = rng.next_uniform(scheme.low, scheme.high);
    for (double& v : m.T) v = rng.next_uniform(scheme.low, scheme.high);
    return m;
}

void Model::check_entry(const Entry& e) const {
    if (!shape_.contains(e.i, e.j, e.k)) {
        throw std::out_of_range("model: index (" + std::to_string(e.i) + "," +
                                std::to_string(e.j) + "," + std::to_string(e.k) +
                                ") outside shape (" + std::to_string(shape_.n_stations) + "," +
                                std::to_string(shape_.n_metrics) + "," +
                                std::to_string(shape_.n_slots) + ")");
    }
}

double Model::predict(Index i, Index j, Index k) const {
    check_entry(Entry{i, j, k, 0.0});
    const double* s = s_row(i);
    const double* m = m_row(j);
    const double* t = t_row(k);
    double sum = 0.0;
    for (int r = 0; r < rank_; ++r) {
        sum += s[r] * m[r] * t[r];
    }
    return sum + a[i] + b[j] + c[k];
}

double Model::loss(const SparseTensor& data, double lambda, bool bias_reg_outside_rank) const {
    if (lambda < 0.0) {
        throw std::invalid_argument("loss: lambda must be >= 0");
    }
    double total = 0.0;
    for (const Entry& e : data.entries()) {
        check_entry(e);
        const double res = e.value - predict(e.i, e.j, e.k);
        double term = res * res;
        if (lambda > 0.0) {
            const double* s = s_row(e.i);
            const double* m = m_row(e.j);
            const double* t = t_row(e.k);
            double reg = 0.0;
            for (int r = 0; r < rank_; ++r) {
                reg += s[r] * s[r] + m[r] * m[r] + t[r] * t[r];
            }
            const double bias_sq = a[e.i] * a[e.i] + b[e.j] * b[e.j] + c[e.k] * c[e.k];
            reg += bias_sq * (bias_reg_outside_rank ? 1.0 : static_cast<double>(rank_));
            term += lambda * reg;
        }
        total += term;
    }
    return 0.5 * total;
}

namespace {

void write_row(std::ostream& out, const double* row, int n) {
    for (int r = 0; r < n; ++r) {
        if (r > 0) out << ' ';
        out << detail::fmt_g17(row[r]);
    }
    out << '\n';
}

void read_values(std::istream& in, std::vector<double>& dst, const char* what) {
    for (double& v : dst) {
        if (!(in >> v)) {
            throw std::runtime_error(std::string("load_model: truncated ") + what + " block");
        }
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string("load_model: non-finite value in ") + what);
        }
    }
}

}  // namespace

void save_model(const Model& m, std::ostream& out) {
    const TensorShape& s = m.shape();
    out << kMagic << '\n';
    out << s.n_stations << ' ' << s.n_metrics << ' ' << s.n_slots << ' ' << m.rank() << '\n';
    for (Index i = 0; i < s.n_stations; ++i) write_row(out, m.s_row(i), m.rank());
    for (Index j = 0; j < s.n_metrics; ++j) write_row(out, m.m_row(j), m.rank());
    for (Index k = 0; k < s.n_slots; ++k) write_row(out, m.t_row(k), m.rank());
    write_row(out, m.a.data(), static_cast<int>(m.a.size()));
    write_row(out, m.b.data(), static_cast<int>(m.b.size()));
    write_row(out, m.c.data(), static_cast<int>(m.c.size()));
}

Model load_model(std::istream& in) {
    std::string magic;
    if (!(in >> magic) || magic != kMagic) {
        throw std::runtime_error("load_model: not a model file (bad magic)");
    }
    Index ni, nj, nk;
    int rank;
    if (!(in >> ni >> nj >> nk >> rank)) {
        throw std::runtime_error("load_model: malformed header");
    }
    Model m(TensorShape{ni, nj, nk}, rank);
    read_values(in, m.S, "S");
    read_values(in, m.M, "M");
    read_values(in, m.T, "T");
    read_values(in, m.a, "a");
    read_values(in, m.b, "b");
    read_values(in, m.c, "c");
    return m;
}

void save_model_file(const Model& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_model: cannot open '" + path + "'");
    }
    save_model(m, out);
}

Model load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_model: cannot open '" + path + "'");
    }
    return load_model(in);
}

}  // namespace pidlft
