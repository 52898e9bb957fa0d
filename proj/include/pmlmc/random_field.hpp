#ifndef PMLMC_RANDOM_FIELD_HPP
#define PMLMC_RANDOM_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "pmlmc/errors.hpp"
#include "pmlmc/mesh.hpp"
#include "pmlmc/rng.hpp"

namespace pmlmc {

// Lognormal conductivity k = exp(g) where g has exponential covariance
//   C(x,y) = sigma2 * exp(-|x-y|_1 / lambda)
// truncated to M Karhunen-Loeve modes.
struct random_field_spec {
    double sigma2 = 1.0;
    double corr_length = 0.1;
    int dimension = 1; // 1 or 2
    int modes = 100;   // truncation M
    std::function<double(const point&)> mean_log_field; // default 0

    double mean_at(const point& x) const { return mean_log_field ? mean_log_field(x) : 0.0; }

    void validate() const {
        require(sigma2 > 0.0, "field spec: sigma2 must be positive");
        require(corr_length > 0.0, "field spec: correlation length must be positive");
        require(dimension == 1 || dimension == 2, "field spec: dimension must be 1 or 2");
        require(modes >= 0, "field spec: modes must be nonnegative (0 = deterministic)");
    }
};

inline double covariance(const point& x, const point& y, const random_field_spec& spec) {
    double d1 = std::abs(x[0] - y[0]);
    if (spec.dimension == 2) d1 += std::abs(x[1] - y[1]);
    return spec.sigma2 * std::exp(-d1 / spec.corr_length);
}

// Truncated eigen-decomposition of the covariance operator, generated on a
// uniform grid of spacing dx. In 2D the eigenpairs are tensor products of 1D
// ones, re-sorted in magnitude and truncated; only the 1D factor functions
// are stored.
struct kl_basis {
    random_field_spec spec;
    double dx = 0.0;
    Eigen::VectorXd grid;      // generation grid nodes on [0,1]
    Eigen::VectorXd theta;     // M eigenvalues of the d-dim operator, nonincreasing
    Eigen::VectorXd theta_1d;  // 1D factor eigenvalues (sigma2-scaled), nonincreasing
    Eigen::MatrixXd phi_1d;    // grid x M1 nodal factor eigenfunctions, L2-normalized
    std::vector<std::array<int, 2>> pairs; // d=2: (i,j) factor indices per mode

    int modes() const { return int(theta.size()); }

    // piecewise-linear interpolation of factor n at coordinate t in [0,1]
    double eval_factor(int n, double t) const {
        const int last = int(grid.size()) - 1;
        double s = t / dx;
        int i = std::clamp(int(std::floor(s)), 0, last - 1);
        const double w = std::clamp(s - double(i), 0.0, 1.0);
        return (1.0 - w) * phi_1d(i, n) + w * phi_1d(i + 1, n);
    }

    double eval_mode(int n, const point& x) const {
        if (spec.dimension == 1) return eval_factor(n, x[0]);
        return eval_factor(pairs[n][0], x[0]) * eval_factor(pairs[n][1], x[1]);
    }

    // npts x M matrix of mode values, for precomputing per-mesh evaluations
    Eigen::MatrixXd eval_matrix(const std::vector<point>& pts) const {
        Eigen::MatrixXd phi(pts.size(), modes());
        for (int p = 0; p < int(pts.size()); ++p)
            for (int n = 0; n < modes(); ++n) phi(p, n) = eval_mode(n, pts[p]);
        return phi;
    }
};

namespace detail {

// Nystrom discretization with trapezoid weights: the symmetrized problem
// D^1/2 C D^1/2 psi = theta psi gives phi = D^-1/2 psi with quadrature-L2
// normalization sum w_i phi_i^2 = 1.
inline void nystrom_1d(const random_field_spec& spec, double dx, int m,
                       Eigen::VectorXd& grid, Eigen::VectorXd& theta, Eigen::MatrixXd& phi) {
    const double inv = 1.0 / dx;
    const int n = int(std::llround(inv));
    require(n >= 1 && std::abs(inv - double(n)) < 1e-9 * inv,
            "kl basis: 1/dx must be a positive integer");
    const int npts = n + 1;
    require(m <= npts, "kl basis: requested modes exceed available discrete modes (" +
                           std::to_string(npts) + ")");
    grid.resize(npts);
    for (int i = 0; i < npts; ++i) grid[i] = double(i) / double(n);
    if (m == 0) { // deterministic field: no eigensolve needed
        theta.resize(0);
        phi.resize(npts, 0);
        return;
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(npts, dx);
    w[0] = w[npts - 1] = 0.5 * dx;
    const Eigen::VectorXd sw = w.array().sqrt();

    Eigen::MatrixXd b(npts, npts);
    for (int i = 0; i < npts; ++i)
        for (int j = 0; j <= i; ++j) {
            const double c =
                spec.sigma2 * std::exp(-std::abs(grid[i] - grid[j]) / spec.corr_length);
            b(i, j) = b(j, i) = sw[i] * sw[j] * c;
        }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    require_numeric(es.info() == Eigen::Success, "kl basis: eigen decomposition failed");

    theta.resize(m);
    phi.resize(npts, m);
    for (int k = 0; k < m; ++k) {
        const int src = npts - 1 - k; // ascending -> descending
        theta[k] = std::max(es.eigenvalues()[src], 0.0);
        phi.col(k) = es.eigenvectors().col(src).array() / sw.array();
        // fix sign for reproducible caches: first nonzero entry positive
        for (int i = 0; i < npts; ++i) {
            if (std::abs(phi(i, k)) > 1e-12) {
                if (phi(i, k) < 0.0) phi.col(k) = -phi.col(k);
                break;
            }
        }
    }
}

// Tensor step: eigenvalues of the separable 2D kernel are products of 1D
// ones, re-ordered in magnitude and truncated. theta_1d carries one sigma2
// factor each while the 2D kernel carries sigma2 once, hence the division.
// Ties break by (i+j, i) so caches reload to the same ordering.
inline void tensorize_2d(kl_basis& kb) {
    const int m1 = int(kb.theta_1d.size());
    const int m = kb.spec.modes;
    struct prod {
        double value;
        int i, j;
    };
    std::vector<prod> all;
    all.reserve(size_t(m1) * m1);
    for (int i = 0; i < m1; ++i)
        for (int j = 0; j < m1; ++j)
            all.push_back({kb.theta_1d[i] * kb.theta_1d[j] / kb.spec.sigma2, i, j});
    std::sort(all.begin(), all.end(), [](const prod& a, const prod& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.i + a.j != b.i + b.j) return a.i + a.j < b.i + b.j;
        return a.i < b.i;
    });
    require(m <= int(all.size()), "kl basis: 2D truncation exceeds available products");
    kb.theta.resize(m);
    kb.pairs.resize(m);
    for (int n = 0; n < m; ++n) {
        kb.theta[n] = all[n].value;
        kb.pairs[n] = {all[n].i, all[n].j};
    }
}

} // namespace detail

inline kl_basis build_kl_basis(const random_field_spec& spec, double dx) {
    spec.validate();
    kl_basis kb;
    kb.spec = spec;
    kb.dx = dx;
    // For d=2 the top-M products of two nonincreasing sequences only involve
    // the first M factors of each, so M 1D modes suffice.
    detail::nystrom_1d(spec, dx, spec.modes, kb.grid, kb.theta_1d, kb.phi_1d);
    if (spec.dimension == 1)
        kb.theta = kb.theta_1d;
    else
        detail::tensorize_2d(kb);
    return kb;
}

// One realization of the log-conductivity: the xi vector is the sample
// identity, values are evaluated lazily per query grid.
struct field_realization {
    std::int64_t sample_id = 0;
    Eigen::VectorXd xi;
    Eigen::VectorXd log_k; // at the query points it was evaluated on
};

inline Eigen::VectorXd sample_log_field(const kl_basis& basis, const Eigen::VectorXd& xi,
                                        const std::vector<point>& pts) {
    require(int(xi.size()) == basis.modes(),
            "sample_log_field: xi length does not match basis modes");
    const Eigen::MatrixXd phi = basis.eval_matrix(pts);
    const Eigen::VectorXd amp = basis.theta.array().sqrt() * xi.array();
    Eigen::VectorXd v = phi * amp;
    for (int p = 0; p < int(pts.size()); ++p) v[p] += basis.spec.mean_at(pts[p]);
    return v;
}

// --- basis cache file -------------------------------------------------------
// header: sigma2, lambda, d, M, dx; then theta_n rows and phi_n columns.
// %.17g formatting makes save/load round-trip bitwise.

inline void save_kl_basis(const std::string& path, const kl_basis& kb) {
    std::ofstream os(path);
    require(bool(os), "cannot open kl cache for writing: " + path);
    char buf[512];
    os << "# pmlmc kl basis v1\n";
    os << "sigma2,lambda,d,M,dx\n";
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d,%.17g\n", kb.spec.sigma2,
                  kb.spec.corr_length, kb.spec.dimension, kb.spec.modes, kb.dx);
    os << buf << "theta\n";
    for (int n = 0; n < int(kb.theta_1d.size()); ++n) {
        std::snprintf(buf, sizeof buf, "%.17g\n", kb.theta_1d[n]);
        os << buf;
    }
    os << "phi\n";
    for (int i = 0; i < int(kb.grid.size()); ++i) {
        for (int n = 0; n < int(kb.phi_1d.cols()); ++n) {
            std::snprintf(buf, sizeof buf, n ? ",%.17g" : "%.17g", kb.phi_1d(i, n));
            os << buf;
        }
        os << '\n';
    }
}

inline kl_basis load_kl_basis(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "cannot open kl cache: " + path);
    std::string line;
    std::getline(is, line);
    require(line == "# pmlmc kl basis v1", "kl cache: unknown format: " + path);
    std::getline(is, line); // header names
    std::getline(is, line);
    kl_basis kb;
    {
        std::istringstream ss(line);
        char comma = 0;
        require(bool(ss >> kb.spec.sigma2 >> comma >> kb.spec.corr_length >> comma >>
                     kb.spec.dimension >> comma >> kb.spec.modes >> comma >> kb.dx),
                "kl cache: bad header values");
    }
    std::getline(is, line);
    require(line == "theta", "kl cache: missing theta block");
    std::vector<double> th;
    while (std::getline(is, line) && line != "phi") th.push_back(std::stod(line));
    require(line == "phi", "kl cache: missing phi block");
    kb.theta_1d = Eigen::Map<Eigen::VectorXd>(th.data(), th.size());
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
        require(int(r.size()) == int(th.size()), "kl cache: ragged phi row");
        rows.push_back(std::move(r));
    }
    kb.grid.resize(rows.size());
    const int n = int(rows.size()) - 1;
    for (int i = 0; i <= n; ++i) kb.grid[i] = double(i) / double(n);
    kb.phi_1d.resize(rows.size(), th.size());
    for (int i = 0; i < int(rows.size()); ++i)
        for (int j = 0; j < int(th.size()); ++j) kb.phi_1d(i, j) = rows[i][j];

    if (kb.spec.dimension == 1)
        kb.theta = kb.theta_1d;
    else
        detail::tensorize_2d(kb);
    return kb;
}

// FNV-1a over the formatted field parameters; guards reference files against
// being reused with a different field.
inline std::uint64_t field_spec_hash(const random_field_spec& spec, double dx) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g|%.17g|%d|%d|%.17g", spec.sigma2, spec.corr_length,
                  spec.dimension, spec.modes, dx);
    std::uint64_t h = 1469598103934665603ull;
    for (const char* p = buf; *p; ++p) {
        h ^= std::uint64_t(static_cast<unsigned char>(*p));
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace pmlmc

#endif
