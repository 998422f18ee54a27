#include "retas/smoother.hpp"

#include "log_math.hpp"
#include "retas/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace retas {

using detail::kNegInf;
using detail::log_add;
using detail::log_sum_exp;

namespace {

[[noreturn]] void fail_at(std::size_t r, std::size_t j, const char* what) {
    throw NumericalError(std::string("non-finite ") + what + " at (" + std::to_string(r) + ", " +
                         std::to_string(j) + ")");
}

void normalise_row(std::span<double> row, std::size_t r, const char* what) {
    const double norm = log_sum_exp(row);
    if (!std::isfinite(norm)) {
        fail_at(r, 0, what);
    }
    for (double& v : row) {
        v -= norm;
    }
}

// log k(m_j) g(t_r - t_j) f(x_r - x_j, y_r - y_j) for j < r.
std::vector<double> log_response_row(std::size_t r, const Catalog& catalog, const RetasParams& params) {
    const double log_norm = std::log(params.p - 1.0) - std::log(params.c) - std::log(2.0 * std::numbers::pi) -
                            0.5 * std::log(params.sigma1_sq * params.sigma2_sq) + std::log(params.A);
    const Event& e = catalog[r];
    std::vector<double> out(r);
    for (std::size_t j = 0; j < r; ++j) {
        const Event& pj = catalog[j];
        const double dx = e.x - pj.x;
        const double dy = e.y - pj.y;
        out[j] = log_norm + params.alpha * (pj.m - catalog.m0) - params.p * std::log1p((e.t - pj.t) / params.c) -
                 0.5 * (dx * dx / params.sigma1_sq + dy * dy / params.sigma2_sq);
    }
    return out;
}

DeclusterResult empty_result(std::size_t n, DeclusterMode mode) {
    DeclusterResult res;
    res.mode = mode;
    res.q = TriangularArray<double>(n, 0.0);
    res.omega_ij = TriangularArray<double>(n, 0.0);
    res.pi = TriangularArray<double>(n, 0.0);
    res.omega.assign(n, 0.0);
    if (n > 0) {
        res.omega[0] = 1.0;
    }
    return res;
}

} // namespace

TriangularArray<double> backward_messages(const FilterState& st) {
    const std::size_t n = st.n;
    TriangularArray<double> lf(n + 1, kNegInf);
    if (n == 0) {
        return lf;
    }
    {
        auto last = lf.row(n);
        const auto lS = st.log_S.row(n);
        std::copy(lS.begin(), lS.end(), last.begin());
        normalise_row(last, n, "terminal backward message");
    }
    for (std::size_t r = n - 1; r >= 1; --r) {
        auto row = lf.row(r);
        const auto next = lf.row(r + 1);
        const double lphi = st.log_phi[r];
        const double lmain = next[r] + st.log_nu[r];
        for (std::size_t j = 0; j < r; ++j) {
            row[j] = st.log_S(r, j) + log_add(next[j] + lphi, lmain + st.log_mu(r, j));
            if (std::isnan(row[j]) || row[j] == std::numeric_limits<double>::infinity()) {
                fail_at(r, j, "backward message");
            }
        }
        normalise_row(row, r, "backward message row");
    }
    return lf;
}

TriangularArray<double> smooth_q(const FilterState& st, const TriangularArray<double>& lf) {
    const std::size_t n = st.n;
    TriangularArray<double> q(n, 0.0);
    std::vector<double> w;
    for (std::size_t r = 1; r < n; ++r) {
        w.assign(r, kNegInf);
        for (std::size_t j = 0; j < r; ++j) {
            w[j] = lf(r, j) + st.log_p(r, j);
        }
        const double norm = log_sum_exp(w);
        if (!std::isfinite(norm)) {
            fail_at(r, 0, "smoothed probability normaliser");
        }
        for (std::size_t j = 0; j < r; ++j) {
            q(r, j) = std::exp(w[j] - norm);
        }
    }
    return q;
}

DeclusterResult decluster_smoothed(const FilterState& st, const TriangularArray<double>& lf,
                                   const TriangularArray<double>& q, const Catalog& catalog,
                                   const RetasParams& params) {
    const std::size_t n = st.n;
    DeclusterResult res = empty_result(n, DeclusterMode::Smoothed);
    res.q = q;
    res.log_f = lf;
    std::vector<double> w;
    for (std::size_t r = 1; r < n; ++r) {
        const double lphi = st.log_phi[r];
        const double lmain_next = lf(r + 1, r) + st.log_nu[r];
        w.assign(r, kNegInf);
        double omega = 0.0;
        for (std::size_t k = 0; k < r; ++k) {
            const double main_term = lmain_next + st.log_mu(r, k);
            const double after_term = lf(r + 1, k) + lphi;
            const double denom = log_add(main_term, after_term);
            if (!std::isfinite(denom)) {
                fail_at(r, k, "branching denominator");
            }
            const double lq = std::log(q(r, k));
            const double om = std::exp(lq + main_term - denom);
            res.omega_ij(r, k) = om;
            omega += om;
            w[k] = lq + lf(r + 1, k) - denom;
        }
        res.omega[r] = omega;
        if (lphi == kNegInf) {
            continue;
        }
        const double lmix = log_sum_exp(w);
        const auto lpsi = log_response_row(r, catalog, params);
        for (std::size_t j = 0; j < r; ++j) {
            res.pi(r, j) = std::exp(lpsi[j] + lmix);
        }
    }
    return res;
}

DeclusterResult decluster_filtered(const FilterState& st, const Catalog& catalog, const RetasParams& params) {
    const std::size_t n = st.n;
    DeclusterResult res = empty_result(n, DeclusterMode::Filtered);
    std::vector<double> w;
    for (std::size_t r = 1; r < n; ++r) {
        const double lphi = st.log_phi[r];
        w.assign(r, kNegInf);
        double omega = 0.0;
        for (std::size_t k = 0; k < r; ++k) {
            const double main_term = st.log_mu(r, k) + st.log_nu[r];
            const double denom = log_add(main_term, lphi);
            if (!std::isfinite(denom)) {
                fail_at(r, k, "filtered branching denominator");
            }
            const double lp = st.log_p(r, k);
            res.q(r, k) = std::exp(lp);
            const double om = std::exp(lp + main_term - denom);
            res.omega_ij(r, k) = om;
            omega += om;
            w[k] = lp - denom;
        }
        res.omega[r] = omega;
        if (lphi == kNegInf) {
            continue;
        }
        const double lmix = log_sum_exp(w);
        const auto lpsi = log_response_row(r, catalog, params);
        for (std::size_t j = 0; j < r; ++j) {
            res.pi(r, j) = std::exp(lpsi[j] + lmix);
        }
    }
    return res;
}

DeclusterResult decluster(const Catalog& catalog, const RetasParams& params, const BackgroundIntensity& nu,
                          DeclusterMode mode) {
    const FilterState st = forward_filter(catalog, params, nu);
    if (mode == DeclusterMode::Filtered) {
        return decluster_filtered(st, catalog, params);
    }
    const auto lf = backward_messages(st);
    const auto q = smooth_q(st, lf);
    return decluster_smoothed(st, lf, q, catalog, params);
}

std::vector<std::size_t> most_probable_labels(const DeclusterResult& result) {
    const std::size_t n = result.size();
    std::vector<std::size_t> labels(n, 0);
    for (std::size_t r = 1; r < n; ++r) {
        double best = result.omega[r];
        for (std::size_t j = 0; j < r; ++j) {
            if (result.pi(r, j) > best) {
                best = result.pi(r, j);
                labels[r] = j + 1;
            }
        }
    }
    return labels;
}

} // namespace retas
