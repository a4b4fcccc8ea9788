#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "afe.hpp"
#include "hecke.hpp"

namespace sfarg {

inline constexpr double default_t_max = 50;

struct AFEParams {
    double target_abs_error = 1e-8;
    // conductor split A√q | √q/A; 1 and 1.2 are the two standard parameterisations
    double A = 1.0;
    // terms actually used by the last evaluation (filled on output)
    std::size_t truncation_length = 0;

    std::string smoothing() const
    {
        return "Mellin cutoff G(w)=exp(w^2/16) for |t|>5, G=1 otherwise; split A=" + fmt15(A);
    }
};

// L(s,f) with its coefficient table, ready for evaluation anywhere in
// −1 ≤ Re s ≤ 5, |Im s| ≤ t_max.
class LFunction {
public:
    LFunction(const HeckeEigenform& f, double t_max = default_t_max, double target = 1e-8) : f_(&f), t_max_(t_max)
    {
        L_.conductor = double(f.q);
        L_.gamma = {{true, 0.5}};
        L_.root_number = f.epsilon;
        L_.coeff_exponent = 1.0 / 3;
        L_.coeff_const = divisor_bound_constant(2, L_.coeff_exponent);
        std::size_t need = required_terms(f.q, t_max + margin, target);
        if (need > f.p_max()) throw InsufficientCoefficients(need, f.p_max());
        L_.a = lambda_table(f, need);
    }

    // Coefficients needed to evaluate at any admissible s for both parameterisations.
    static constexpr double margin = 0.05;

    static std::size_t required_terms(u64 q, double t_max, double target = 1e-8)
    {
        SelfDualL L;
        L.conductor = double(q);
        L.gamma = {{true, 0.5}};
        L.coeff_exponent = 1.0 / 3;
        L.coeff_const = divisor_bound_constant(2, L.coeff_exponent);
        std::size_t need = 0;
        for (double A : {1.0, 1.2}) {
            AfeOptions o{target, A};
            for (double sigma : {-1.0, 0.5, 2.0, 5.0}) need = std::max(need, afe_required_terms(L, cplx(sigma, t_max), o));
        }
        return std::max(need, min_terms(q, t_max)) + 8;
    }
    // 10√q(1+|t|)/(2π)
    static std::size_t min_terms(u64 q, double t)
    {
        return std::size_t(std::ceil(10 * std::sqrt(double(q)) * (1 + std::fabs(t)) / (2 * pi)));
    }

    const HeckeEigenform& form() const { return *f_; }
    u64 q() const { return f_->q; }
    int epsilon() const { return L_.root_number; }
    double t_max() const { return t_max_; }
    const SelfDualL& series() const { return L_; }
    // log(√q/2π)
    double log_Q() const { return std::log(std::sqrt(double(q())) / (2 * pi)); }

    AfeResult evaluate(cplx s, AFEParams& p, int root_number_override = 0) const
    {
        // the margin leaves room for zero-proximity probes and box perturbations at t_max
        if (std::fabs(s.imag()) > t_max_ + margin)
            throw InputError("l_value: |Im s| beyond t_max=" + fmt15(t_max_));
        if (s.real() < -1 - 1e-12 || s.real() > 5 + 1e-12) throw InputError("l_value: Re s outside [-1, 5]");
        SelfDualL L = L_;
        L.min_terms = min_terms(q(), s.imag());
        if (root_number_override) L.root_number = root_number_override;
        auto r = afe_evaluate(L, s, AfeOptions{p.target_abs_error, p.A});
        p.truncation_length = std::max(r.terms_direct, r.terms_dual);
        return r;
    }

private:
    const HeckeEigenform* f_;
    double t_max_;
    SelfDualL L_;
};

inline cplx l_value(const LFunction& L, cplx s, AFEParams p = {}) { return L.evaluate(s, p).value; }

// Λ(s,f) = (√q/2π)^s Γ(s+½) L(s,f)
inline cplx completed_value(const LFunction& L, cplx s, AFEParams p = {})
{
    return std::exp(s * L.log_Q() + log_gamma(s + 0.5)) * l_value(L, s, p);
}

// θ(t) = t log(√q/2π) + Im log Γ(1+it), continuous in t.
inline double theta(const LFunction& L, double t) { return t * L.log_Q() + log_gamma(cplx(1, t)).imag(); }

struct HardyZ {
    double value;
    double imag_residual;
};

inline HardyZ hardy_z_detail(const LFunction& L, double t, AFEParams p = {})
{
    cplx z = std::exp(cplx(0, theta(L, t))) * l_value(L, cplx(0.5, t), p);
    if (L.epsilon() < 0) z *= cplx(0, -1);
    return {z.real(), z.imag()};
}

inline double hardy_z(const LFunction& L, double t, AFEParams p = {})
{
    auto z = hardy_z_detail(L, t, p);
    if (std::fabs(z.imag_residual) > 1e-6)
        throw NumericalError("hardy_z: imaginary residual " + fmt15(z.imag_residual) + " at t=" + fmt15(t));
    return z.value;
}

// ---------------------------------------------------------------------------
// Root number check

struct SignFit {
    int analytic = 0;
    int fitted = 0;
    double residual_plus = 0;  // |Λ(s) − Λ(1−s)| sup over the grid
    double residual_minus = 0; // |Λ(s) + Λ(1−s)|
    bool agree() const { return analytic == fitted; }
};

// The two sides come from different conductor splits, so they only agree
// when the root number is right.
inline double fe_residual(const LFunction& L, int eps, AFEParams p = {})
{
    double worst = 0;
    for (double sigma : {0.5, 0.65, 0.8, 1.0})
        for (double t : {-5.0, -2.2, 0.7, 3.1, 5.0}) {
            cplx s(sigma, t);
            AFEParams p1 = p, p2 = p;
            p1.A = 1.0;
            p2.A = 1.2;
            cplx lam1 = std::exp(s * L.log_Q() + log_gamma(s + 0.5)) * L.evaluate(s, p1, eps).value;
            cplx s2 = 1.0 - s;
            cplx lam2 = std::exp(s2 * L.log_Q() + log_gamma(s2 + 0.5)) * L.evaluate(s2, p2, eps).value;
            worst = std::max(worst, std::abs(lam1 - double(eps) * lam2));
        }
    return worst;
}

inline SignFit fit_root_number(const LFunction& L, AFEParams p = {})
{
    SignFit r;
    r.analytic = L.epsilon();
    r.residual_plus = fe_residual(L, +1, p);
    r.residual_minus = fe_residual(L, -1, p);
    r.fitted = r.residual_plus <= r.residual_minus ? +1 : -1;
    return r;
}

// ---------------------------------------------------------------------------
// S(t,f)

struct ArgTrace {
    double t = 0;
    std::vector<double> sigma_grid; // decreasing, σ_start → ½
    std::vector<double> phase;
    double s_value = 0;
    double min_modulus = 0;
    double euler_phase = 0; // principal-branch Im log L(σ_start+it) from the Euler product
    double euler_tail = 0;
    int halvings = 0;
};

// Principal Im log L(s) = −Σ_p Im log(1 − λ(p)p^{−s} + χ(p)p^{−2s}), Re s ≥ 2.
inline std::pair<double, double> euler_log_imag(const LFunction& L, cplx s)
{
    const auto& f = L.form();
    CompensatedSum acc;
    for (std::size_t i = 0; i < f.primes.size(); ++i) {
        double lp = std::log(double(f.primes[i]));
        cplx x = std::exp(-s * lp);
        double chi = f.primes[i] == f.q ? 0.0 : 1.0;
        acc += -std::log(1.0 - f.lambda[i] * x + chi * x * x).imag();
    }
    // |log(1 − λx + x²)| ≤ 2.2 p^{−σ} and π(x) < 1.26 x/log x
    double sigma = s.real(), P = double(f.p_max());
    double tail = 2.2 * 1.26 * std::pow(P, 1 - sigma) / ((sigma - 1) * std::log(P));
    return {acc.value(), tail};
}

struct STraceOptions {
    double sigma_start = 3;
    double step = 0.1;
    double zero_exclusion = 1e-4;
    double min_modulus = 1e-6;
    bool check_zero_proximity = true;
};

// Trace at any height t ≠ 0; S(−t) = −S(t) by conjugation.
inline ArgTrace arg_trace(const LFunction& L, double t, AFEParams p = {}, STraceOptions o = {})
{
    if (t == 0) throw InputError("arg_trace: t must be nonzero");
    if (std::fabs(t) > L.t_max()) throw InputError("s_of_t: |t| beyond t_max");
    if (o.check_zero_proximity && std::fabs(t) > o.zero_exclusion) {
        double za = hardy_z(L, t - o.zero_exclusion, p), zb = hardy_z(L, t + o.zero_exclusion, p);
        if ((za > 0) != (zb > 0))
            throw InputError("s_of_t: t=" + fmt15(t) + " lies within " + fmt15(o.zero_exclusion) +
                             " of a critical-line zero");
    }
    ArgTrace tr;
    tr.t = t;
    cplx s0(o.sigma_start, t);
    cplx L0 = l_value(L, s0, p);
    auto [eul, tail] = euler_log_imag(L, s0);
    tr.euler_phase = eul;
    tr.euler_tail = tail;
    double ph = std::arg(L0);
    if (std::fabs(ph - eul) > 1e-9 + tail)
        throw NumericalError("s_of_t: AFE and Euler product disagree at sigma_start (" + fmt15(ph) + " vs " +
                             fmt15(eul) + ")");
    tr.sigma_grid.push_back(o.sigma_start);
    tr.phase.push_back(ph);
    tr.min_modulus = std::abs(L0);

    // march down with the base step; subdivide any step whose phase increment is ≥ π/2
    struct Node { double sigma; cplx val; };
    Node cur{o.sigma_start, L0};
    int nsteps = int(std::lround((o.sigma_start - 0.5) / o.step));
    for (int k = 1; k <= nsteps; ++k) {
        double target = o.sigma_start - (o.sigma_start - 0.5) * k / nsteps;
        std::vector<std::pair<double, int>> stack{{target, 0}};
        while (!stack.empty()) {
            auto [sg, depth] = stack.back();
            cplx v = l_value(L, cplx(sg, t), p);
            double m = std::abs(v);
            if (m < o.min_modulus)
                throw NumericalError("s_of_t: |L| = " + fmt15(m) + " < " + fmt15(o.min_modulus) +
                                     " at sigma=" + fmt15(sg) + ", t=" + fmt15(t));
            double d = std::arg(v / cur.val);
            if (std::fabs(d) >= pi / 2) {
                if (depth >= 20) throw NumericalError("s_of_t: phase unwrapping did not converge");
                tr.halvings = std::max(tr.halvings, depth + 1);
                stack.push_back({0.5 * (cur.sigma + sg), depth + 1});
                continue;
            }
            stack.pop_back();
            tr.min_modulus = std::min(tr.min_modulus, m);
            ph += d;
            cur = {sg, v};
            tr.sigma_grid.push_back(sg);
            tr.phase.push_back(ph);
        }
    }
    tr.s_value = ph / pi;
    return tr;
}

inline ArgTrace s_of_t(const LFunction& L, double t, AFEParams p = {}, STraceOptions o = {})
{
    if (!(t > 0)) throw InputError("s_of_t: t must be > 0");
    return arg_trace(L, t, p, o);
}

// ---------------------------------------------------------------------------
// zeros

// Winding of Λ around the rectangle [sl, sr] × [−T, T], as total phase change.
inline double boundary_phase_change(const LFunction& L, double sl, double sr, double T, AFEParams p = {},
                                    double base_step = 0.05)
{
    const double lq = L.log_Q();
    auto corners = std::vector<cplx>{{sr, -T}, {sr, T}, {sl, T}, {sl, -T}, {sr, -T}};
    CompensatedSum total;
    for (int e = 0; e < 4; ++e) {
        cplx a = corners[e], b = corners[e + 1];
        int n = std::max(1, int(std::ceil(std::abs(b - a) / base_step)));
        cplx za = a;
        cplx La = l_value(L, za, p);
        cplx ga = log_gamma(za + 0.5);
        for (int k = 1; k <= n; ++k) {
            cplx zt = a + (b - a) * (double(k) / n);
            std::vector<std::pair<cplx, int>> stack{{zt, 0}};
            while (!stack.empty()) {
                auto [zb, depth] = stack.back();
                cplx Lb = l_value(L, zb, p);
                cplx gb = log_gamma(zb + 0.5);
                double rot = ((zb - za) * lq).imag() + std::remainder((gb - ga).imag(), 2 * pi);
                double d = std::arg(std::exp(cplx(0, rot)) * (Lb / La));
                if (std::fabs(d) >= pi / 4 && depth < 24) {
                    stack.push_back({0.5 * (za + zb), depth + 1});
                    continue;
                }
                if (std::fabs(d) >= pi / 4) throw NumericalError("box: boundary phase did not resolve");
                stack.pop_back();
                total += d;
                za = zb;
                La = Lb;
                ga = gb;
            }
        }
    }
    return total.value();
}

struct ZeroBox {
    int form_id = 0;
    double sigma_left = 0.5;
    double T = 0;
    int count = 0;
    double boundary_arg_change = 0;
    int perturbations = 0;
};

struct ZeroCountOptions {
    int max_perturbations = 10;
    double clearance = 1e-3;
};

// Counts over [sl, 2]×[−T, T]; T is nudged up by 1e-3 steps while a known
// critical zero sits within the clearance of the horizontal edges.
inline ZeroBox zero_count_rect(const LFunction& L, double sl, double T, const std::vector<double>& known_zeros,
                               AFEParams p = {}, ZeroCountOptions o = {})
{
    ZeroBox z;
    z.form_id = L.form().id;
    z.sigma_left = sl;
    double TT = T;
    for (;; TT += o.clearance) {
        bool clear = true;
        for (double g : known_zeros)
            if (std::fabs(g - TT) < o.clearance) clear = false;
        // a sign change of Z across the clearance band also marks a nearby zero
        if (clear && (hardy_z(L, TT - o.clearance, p) > 0) != (hardy_z(L, TT + o.clearance, p) > 0)) clear = false;
        if (clear) break;
        if (++z.perturbations > o.max_perturbations)
            throw NumericalError("zero_count_box: boundary stays near a zero after perturbations");
    }
    if (TT > L.t_max() + LFunction::margin) throw InputError("zero_count_box: T beyond t_max");
    z.T = TT;
    z.boundary_arg_change = boundary_phase_change(L, sl, 2.0, TT, p);
    double w = z.boundary_arg_change / (2 * pi);
    z.count = int(std::lround(w));
    if (std::fabs(w - z.count) >= 0.1) throw NumericalError("zero_count_box: winding residual " + fmt15(w - z.count));
    return z;
}

inline ZeroBox zero_count_box(const LFunction& L, double sigma, double T, const std::vector<double>& known_zeros = {},
                              AFEParams p = {})
{
    if (!(sigma > 0.5 && sigma <= 1)) throw InputError("zero_count_box: sigma must be in (1/2, 1]");
    return zero_count_rect(L, sigma, T, known_zeros, p);
}

// Order of vanishing at s = ½ by winding around a small square.
inline int central_order(const LFunction& L, AFEParams p = {}, double half = 0.05)
{
    const double lq = L.log_Q();
    cplx corners[] = {{0.5 + half, -half}, {0.5 + half, half}, {0.5 - half, half}, {0.5 - half, -half},
                      {0.5 + half, -half}};
    CompensatedSum total;
    for (int e = 0; e < 4; ++e) {
        const int n = 16;
        cplx za = corners[e];
        cplx La = l_value(L, za, p), ga = log_gamma(za + 0.5);
        for (int k = 1; k <= n; ++k) {
            cplx zb = corners[e] + (corners[e + 1] - corners[e]) * (double(k) / n);
            cplx Lb = l_value(L, zb, p), gb = log_gamma(zb + 0.5);
            double rot = ((zb - za) * lq).imag() + (gb - ga).imag();
            total += std::arg(std::exp(cplx(0, rot)) * (Lb / La));
            za = zb;
            La = Lb;
            ga = gb;
        }
    }
    return int(std::lround(total.value() / (2 * pi)));
}

struct CriticalZeros {
    std::vector<double> ordinates;
    double grid = 0.01;
    int central_order = 0;
    ZeroBox strip; // [−1,2]×[−T,T]
    int retries = 0;
};

// Zeros of Z on (0,T], certified against the argument-principle count of the full strip.
inline CriticalZeros critical_zeros(const LFunction& L, double T, AFEParams p = {}, double grid = 0.01)
{
    if (T > L.t_max()) throw InputError("critical_zeros: T beyond t_max");
    CriticalZeros out;
    out.central_order = central_order(L, p);
    for (int attempt = 0; attempt <= 4; ++attempt, grid /= 2) {
        std::vector<double> zs;
        int n = int(std::ceil(T / grid));
        double t0 = grid, z0 = hardy_z(L, t0, p);
        for (int k = 2; k <= n; ++k) {
            double t1 = std::min(T, k * grid), z1 = hardy_z(L, t1, p);
            if ((z0 > 0) != (z1 > 0) && z0 != 0) {
                double a = t0, b = t1, za = z0;
                while (b - a > 1e-8) {
                    double m = 0.5 * (a + b), zm = hardy_z(L, m, p);
                    if ((zm > 0) == (za > 0)) { a = m; za = zm; } else b = m;
                }
                zs.push_back(0.5 * (a + b));
            }
            t0 = t1;
            z0 = z1;
        }
        auto box = zero_count_rect(L, -1.0, T, zs, p);
        // zeros in (T, box.T] would be counted by the box too
        int line = 0;
        for (double g : zs) line += (g <= box.T);
        if (box.T > T) {
            // extend the line count to the perturbed height
            double za = hardy_z(L, T, p), zb = hardy_z(L, box.T, p);
            if ((za > 0) != (zb > 0)) ++line;
        }
        out.strip = box;
        out.retries = attempt;
        out.grid = grid;
        if (box.count == 2 * line + out.central_order) {
            out.ordinates = std::move(zs);
            return out;
        }
    }
    throw NumericalError("critical_zeros: line count disagrees with the box count after 4 refinements");
}

// ---------------------------------------------------------------------------
// σ_x

enum class SigmaStatus { certified_trivial, certified_box, flagged };

struct SigmaX {
    double value = 0;
    SigmaStatus status = SigmaStatus::flagged;
    double max_offline = 0; // |β − ½| of the worst qualifying zero found (0 if none)
    std::string note;
};

inline std::string to_string(SigmaStatus s)
{
    switch (s) {
    case SigmaStatus::certified_trivial: return "certified_trivial";
    case SigmaStatus::certified_box: return "certified_box";
    default: return "flagged";
    }
}

// σ_x = ½ + 2 max{ |β−½| over zeros with |t−γ| ≤ x^{3|β−½|}/log x, 5/log x }.
// A zero can only raise σ_x if |β−½| > 5/log x; when ½ + 5/log x ≥ 1 no such
// zero exists (β < 1), otherwise the window right of ½ + 5/log x is checked
// by a box count as far as t_max allows.
inline SigmaX sigma_x(const LFunction& L, double t, double x, AFEParams p = {})
{
    if (!(x >= 4)) throw InputError("sigma_x: x must be >= 4");
    SigmaX r;
    double lx = std::log(x);
    double base = 0.5 + 10 / lx;
    double edge = 0.5 + 5 / lx;
    if (edge >= 1) {
        r.value = base;
        r.status = SigmaStatus::certified_trivial;
        r.note = "1/2 + 5/log x >= 1";
        return r;
    }
    double W = std::pow(x, 1.5) / lx;
    double T = std::fabs(t) + W;
    double Tbox = std::min(T, L.t_max() - 0.05);
    auto box = zero_count_rect(L, edge, Tbox, {}, p);
    r.value = base;
    if (box.count == 0 && Tbox >= T) {
        r.status = SigmaStatus::certified_box;
        r.note = "no zeros in [" + fmt15(edge) + ",2]x[-" + fmt15(T) + "," + fmt15(T) + "]";
        return r;
    }
    r.status = SigmaStatus::flagged;
    if (box.count == 0) {
        r.note = "window exceeds t_max; zero-free only up to height " + fmt15(box.T);
        return r;
    }
    // localise the largest β by bisection on the left edge
    double lo = edge, hi = 1.0;
    for (int it = 0; it < 30; ++it) {
        double m = 0.5 * (lo + hi);
        if (zero_count_rect(L, m, Tbox, {}, p).count > 0) lo = m; else hi = m;
    }
    r.max_offline = lo - 0.5;
    r.value = 0.5 + 2 * std::max(r.max_offline, 5 / lx);
    r.note = "off-line zero near beta=" + fmt15(lo);
    return r;
}

// ---------------------------------------------------------------------------
// GRH diagnostic: |S(t,f)| log log(|t|+q) / log(|t|+q)

struct GrhRow {
    int form_id;
    double t;
    double s_value;
    double ratio;
};

struct GrhReport {
    u64 q = 0;
    std::vector<GrhRow> rows;
    double max_ratio = 0;
};

inline double grh_ratio(u64 q, double t, double S)
{
    double lt = std::log(std::fabs(t) + double(q));
    return std::fabs(S) * std::log(lt) / lt;
}

inline GrhReport grh_diagnostic(const std::vector<LFunction>& Ls, const std::vector<double>& t_grid, AFEParams p = {})
{
    GrhReport rep;
    if (!Ls.empty()) rep.q = Ls.front().q();
    for (const auto& L : Ls)
        for (double t : t_grid) {
            double S = s_of_t(L, std::fabs(t), p).s_value * (t < 0 ? -1 : 1);
            double ratio = grh_ratio(L.q(), t, S);
            rep.rows.push_back({L.form().id, t, S, ratio});
            rep.max_ratio = std::max(rep.max_ratio, ratio);
        }
    return rep;
}

// Shape (1+T)^A q^{−2c(σ−½)} (log q) T of the family zero-density bound; c and A are unspecified
// absolute constants, so this is only tabulated next to Σ_f ω_f N(f;σ,T).
inline double zero_density_shape(u64 q, double sigma, double T, double c = 0.25, double A = 4)
{
    double lq = std::log(double(q));
    return std::pow(1 + T, A) * std::exp(-2 * c * (sigma - 0.5) * lq) * lq * T;
}

} // namespace sfarg
