#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "family.hpp"
#include "lmfdb.hpp"

namespace sfarg {

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
    std::vector<u64> q_list{11};
    std::vector<double> t_grid{1.0};
    double delta = 0.2;
    int n_max = 4;
    u64 P_max = 10000;
    u64 P_sym = 0; // > 0: also report the Euler-product L(1,sym²f) over p ≤ P_sym
    u64 c_max = 0; // 0: 10⁵·q
    u64 petersson_mn_max = 30;
    double t_max = default_t_max;
    double zeros_T = 20;
    double afe_error = 1e-8;
    int threads = 1;
    std::string cache_dir = "cache";
    std::string out_dir = "out";
    bool offline = false;
    std::string lmfdb_url = default_lmfdb_url;
    u64 P_check = 97;
    double selberg_x = 0; // 0: max(4, q^{δ/3})
    std::vector<double> density_sigmas{0.6, 0.75, 0.9};
    double diag_c = 0.25; // Lemma 2.4 diagnostics
    double diag_A = 4;
    int hist_bins = 20;
};

inline nlohmann::json to_json(const RunConfig& c)
{
    nlohmann::json j;
    j["q_list"] = c.q_list;
    j["t_grid"] = c.t_grid;
    j["delta"] = c.delta;
    j["n_max"] = c.n_max;
    j["P_max"] = c.P_max;
    j["P_sym"] = c.P_sym;
    j["c_max"] = c.c_max;
    j["petersson_mn_max"] = c.petersson_mn_max;
    j["t_max"] = c.t_max;
    j["zeros_T"] = c.zeros_T;
    j["afe_error"] = c.afe_error;
    j["threads"] = c.threads;
    j["cache_dir"] = c.cache_dir;
    j["out_dir"] = c.out_dir;
    j["offline"] = c.offline;
    j["lmfdb_url"] = c.lmfdb_url;
    j["P_check"] = c.P_check;
    j["selberg_x"] = c.selberg_x;
    j["density_sigmas"] = c.density_sigmas;
    j["diag_c"] = c.diag_c;
    j["diag_A"] = c.diag_A;
    j["hist_bins"] = c.hist_bins;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j)
{
    RunConfig c;
    const auto known = to_json(c);
    if (!j.is_object()) throw InputError("config: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key()) && it.key() != "q" && it.key() != "t")
            throw InputError("config: unknown key '" + it.key() + "'");
    if (j.contains("q") && j.contains("q_list")) throw InputError("config: give q or q_list, not both");
    if (j.contains("t") && j.contains("t_grid")) throw InputError("config: give t or t_grid, not both");
    try {
        if (j.contains("q")) c.q_list = {j.at("q").get<u64>()};
        if (j.contains("t")) c.t_grid = {j.at("t").get<double>()};
        auto get = [&](const char* k, auto& v) {
            if (j.contains(k)) j.at(k).get_to(v);
        };
        get("q_list", c.q_list);
        get("t_grid", c.t_grid);
        get("delta", c.delta);
        get("n_max", c.n_max);
        get("P_max", c.P_max);
        get("P_sym", c.P_sym);
        get("c_max", c.c_max);
        get("petersson_mn_max", c.petersson_mn_max);
        get("t_max", c.t_max);
        get("zeros_T", c.zeros_T);
        get("afe_error", c.afe_error);
        get("threads", c.threads);
        get("cache_dir", c.cache_dir);
        get("out_dir", c.out_dir);
        get("offline", c.offline);
        get("lmfdb_url", c.lmfdb_url);
        get("P_check", c.P_check);
        get("selberg_x", c.selberg_x);
        get("density_sigmas", c.density_sigmas);
        get("diag_c", c.diag_c);
        get("diag_A", c.diag_A);
        get("hist_bins", c.hist_bins);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

inline void validate(const RunConfig& c)
{
    if (c.q_list.empty()) throw InputError("config: q_list is empty");
    if (c.t_grid.empty()) throw InputError("config: t_grid is empty");
    for (double t : c.t_grid)
        if (!(t > 0)) throw InputError("config: every t must be > 0");
    for (double t : c.t_grid)
        if (t > c.t_max) throw InputError("config: t beyond t_max");
    if (c.n_max < 1) throw InputError("config: n_max must be >= 1");
    if (!(c.delta > 0 && c.delta < 1.0 / c.n_max))
        throw InputError("config: need 0 < delta < 1/n_max (delta=" + fmt15(c.delta) + ", n_max=" +
                         std::to_string(c.n_max) + ")");
    if (c.threads < 1) throw InputError("config: threads must be >= 1");
    if (c.P_max < 97) throw InputError("config: P_max must be >= 97");
    if (c.t_max > 50) throw InputError("config: t_max must be <= 50");
    if (c.hist_bins < 1) throw InputError("config: hist_bins must be >= 1");
}

// Only fields that change results enter the stamp, so reruns land in the same directory.
inline std::string run_stamp(const RunConfig& c)
{
    auto j = to_json(c);
    for (const char* k : {"threads", "cache_dir", "out_dir", "offline"}) j.erase(k);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("run-") + std::string(buf).substr(0, 12);
}

inline std::filesystem::path run_dir(const RunConfig& c) { return std::filesystem::path(c.out_dir) / run_stamp(c); }

// ---------------------------------------------------------------------------
// Output

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path)
    {
        std::filesystem::create_directories(path.parent_path());
        out_.open(path);
        if (!out_) throw InputError("cannot write " + path.string());
        row(header);
    }
    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline std::string cell(double x) { return std::isfinite(x) ? fmt15(x) : "nan"; }
inline std::string cell(u64 x) { return std::to_string(x); }
inline std::string cell(int x) { return std::to_string(x); }

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << j.dump(1) << "\n";
    if (!out) throw InputError("cannot write " + path.string());
}

// Results land in index order whatever the thread count.
template <class R>
std::vector<R> parallel_map(std::size_t n, int threads, const std::function<R(std::size_t)>& fn)
{
    std::vector<R> out(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < n;) out[i] = fn(i);
    };
    int k = std::max(1, std::min<int>(threads, int(n)));
    if (k == 1) {
        worker();
        return out;
    }
    std::vector<std::thread> pool;
    for (int i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return out;
}

// ---------------------------------------------------------------------------
// Bases

inline u64 required_P_max(u64 q, const RunConfig& c)
{
    u64 need = std::max<u64>(c.P_max, sym2_required_terms(q));
    need = std::max<u64>(need, LFunction::required_terms(q, c.t_max + LFunction::margin, c.afe_error));
    return std::max<u64>(need, c.P_sym);
}

// Cache hit when the stored table is long enough; otherwise build, weigh and store.
inline EigenBasis obtain_basis(u64 q, const RunConfig& c, std::ostream* log = nullptr)
{
    if (!is_prime_u64(q)) throw InputError("level " + std::to_string(q) + " is not prime");
    u64 need = required_P_max(q, c);
    if (auto B = load_basis(c.cache_dir, q, need)) {
        if (log) *log << "q=" << q << ": basis loaded from cache\n";
        return *B;
    }
    if (log) *log << "q=" << q << ": computing basis (P_max=" << need << ")\n";
    auto S = build_space(q);
    auto B = diagonalize(S, need);
    attach_weights(B);
    save_basis(B, c.cache_dir);
    // reload so fresh and cached runs see bit-identical numbers
    return *load_basis(c.cache_dir, q, need);
}

struct BasisChecks {
    double deligne_excess = -1e300; // max |λ(n)| − τ(n), n ≤ 10⁴
    double hecke_residual = 0;      // max over random m,n ≤ 10³
    double sign_residual = 0;       // max |q λ(q)² − 1|
    double weight_sum = 0;
    double min_separation = 1e300;
    bool pass() const { return deligne_excess <= 1e-8 && hecke_residual <= 1e-8 && sign_residual <= 1e-6; }
};

inline BasisChecks check_basis(const EigenBasis& B, std::uint64_t seed = 20240502, int hecke_pairs = 1000)
{
    BasisChecks r;
    if (B.forms.empty()) {
        r.deligne_excess = 0;
        return r;
    }
    const std::size_t N = std::min<u64>(10000, B.forms.front().p_max());
    auto tau = [&] {
        std::vector<double> t(N + 1, 0.0);
        for (std::size_t d = 1; d <= N; ++d)
            for (std::size_t k = d; k <= N; k += d) t[k] += 1;
        return t;
    }();
    CompensatedSum ws;
    for (const auto& f : B.forms) {
        auto lam = lambda_table(f, N);
        for (std::size_t n = 1; n <= N; ++n) r.deligne_excess = std::max(r.deligne_excess, std::fabs(lam[n]) - tau[n]);
        double lq = f.lambda_p(B.q);
        r.sign_residual = std::max(r.sign_residual, std::fabs(double(B.q) * lq * lq - 1));
        ws += f.omega;
    }
    r.weight_sum = ws.value();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<u64> pick(1, 1000);
    for (int k = 0; k < hecke_pairs; ++k) {
        u64 m = pick(rng), n = pick(rng);
        u64 g = std::gcd(m, n);
        for (const auto& f : B.forms) {
            CompensatedSum rhs;
            for (u64 d = 1; d <= g; ++d)
                if (g % d == 0 && d % B.q != 0) rhs += lambda_n(f, m * n / (d * d));
            r.hecke_residual = std::max(r.hecke_residual, std::fabs(lambda_n(f, m) * lambda_n(f, n) - rhs.value()));
        }
    }
    for (std::size_t a = 0; a < B.forms.size(); ++a)
        for (std::size_t b = a + 1; b < B.forms.size(); ++b) {
            double d = 0;
            for (std::size_t i = 0; i < B.forms[a].lambda.size(); ++i)
                d = std::max(d, std::fabs(B.forms[a].lambda[i] - B.forms[b].lambda[i]));
            r.min_separation = std::min(r.min_separation, d);
        }
    return r;
}

// ---------------------------------------------------------------------------
// Commands.  Each returns the exit code: 0 iff every asserted invariant held.

struct CommandContext {
    RunConfig config;
    std::ostream* log = &std::cerr;
    std::filesystem::path dir() const { return run_dir(config); }
};

inline int cmd_print_config(const RunConfig& c, std::ostream& out)
{
    out << to_json(c).dump(1) << "\n";
    return 0;
}

inline int cmd_basis(const CommandContext& ctx)
{
    const auto& c = ctx.config;
    nlohmann::json summary;
    summary["levels"] = nlohmann::json::array();
    summary["errors"] = nlohmann::json::array();
    bool ok = true;
    for (u64 q : c.q_list) {
        try {
            auto B = obtain_basis(q, c, ctx.log);
            auto chk = check_basis(B);
            nlohmann::json jl;
            jl["q"] = q;
            jl["dim"] = B.dim;
            jl["P_max"] = B.P_max;
            jl["forms"] = nlohmann::json::array();
            for (const auto& f : B.forms) {
                nlohmann::json jf;
                jf["id"] = f.id;
                jf["epsilon"] = f.epsilon;
                jf["omega"] = fmt15(f.omega);
                jf["sym2_l1"] = fmt15(f.sym2_l1);
                if (c.P_sym > 0) jf["sym2_l1_euler"] = fmt15(sym2_l1_euler(f, c.P_sym).value);
                jl["forms"].push_back(jf);
            }
            if (B.dim == 0) jl["note"] = "dimension 0: empty family";
            jl["deligne_excess"] = B.dim ? fmt15(chk.deligne_excess) : "0";
            jl["hecke_residual"] = fmt15(chk.hecke_residual);
            jl["sign_residual"] = fmt15(chk.sign_residual);
            jl["weight_sum"] = fmt15(chk.weight_sum);
            jl["pass"] = chk.pass();
            ok = ok && chk.pass();
            summary["levels"].push_back(jl);
        } catch (const std::exception& e) {
            summary["errors"].push_back({{"q", q}, {"error", e.what()}});
            *ctx.log << "q=" << q << ": " << e.what() << "\n";
            ok = false;
        }
    }
    write_json(ctx.dir() / "basis_summary.json", summary);
    return ok ? 0 : 1;
}

inline int cmd_petersson(const CommandContext& ctx)
{
    const auto& c = ctx.config;
    CsvWriter csv(ctx.dir() / "petersson.csv", {"q", "m", "n", "lhs", "rhs", "tail", "kronecker", "error_scale",
                                                "lemma_precondition", "agree_ok", "closure_ok"});
    bool ok = true;
    for (u64 q : c.q_list) {
        auto B = obtain_basis(q, c, ctx.log);
        std::vector<std::pair<u64, u64>> pairs;
        for (u64 m = 1; m <= c.petersson_mn_max; ++m)
            for (u64 n = m; m * n <= c.petersson_mn_max; ++n) pairs.push_back({m, n});
        u64 cmax = c.c_max ? c.c_max : 100000 * q;
        auto reps = petersson_rhs(q, pairs, cmax);
        for (auto& r : reps) {
            r.lhs = petersson_lhs(B, r.m, r.n);
            bool agree = std::fabs(r.lhs - r.rhs_truncated) <= r.tail_bound + 1e-6;
            double closure_scale = std::pow(double(q), -1.5) * std::sqrt(double(r.m * r.n)) *
                                   double(divisor_tau(std::gcd(r.m, r.n)));
            bool closure = std::fabs(r.lhs - r.kronecker) <= 10 * closure_scale + 1e-6;
            ok = ok && agree && closure;
            csv.row({cell(q), cell(r.m), cell(r.n), cell(r.lhs), cell(r.rhs_truncated), cell(r.tail_bound),
                     cell(r.kronecker), cell(r.error_scale), r.lemma_precondition ? "1" : "0", agree ? "1" : "0",
                     closure ? "1" : "0"});
        }
    }
    return ok ? 0 : 1;
}

inline double selberg_x_for(u64 q, const RunConfig& c)
{
    return c.selberg_x > 0 ? c.selberg_x : std::max(4.0, selberg_x(q, c.delta));
}

struct SRow {
    int form_id = 0;
    double t = 0;
    double S = std::numeric_limits<double>::quiet_NaN();
    double M = 0;
    std::string error;
};

// S and M over the family on the t grid; failures are kept per row.
inline std::vector<SRow> family_s_values(const EigenBasis& B, const RunConfig& c)
{
    double tmax = *std::max_element(c.t_grid.begin(), c.t_grid.end());
    std::vector<std::pair<std::size_t, double>> jobs;
    for (std::size_t i = 0; i < B.forms.size(); ++i)
        for (double t : c.t_grid) jobs.push_back({i, t});
    AFEParams p;
    p.target_abs_error = c.afe_error;
    double x = selberg_x(B.q, c.delta);
    return parallel_map<SRow>(jobs.size(), c.threads, [&](std::size_t k) {
        auto [i, t] = jobs[k];
        const auto& f = B.forms[i];
        SRow r;
        r.form_id = f.id;
        r.t = t;
        r.M = m_value(f, t, x);
        try {
            LFunction L(f, std::min(c.t_max, tmax + 1), c.afe_error);
            r.S = s_of_t(L, t, p).s_value;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    });
}

inline int cmd_svalue(const CommandContext& ctx)
{
    const auto& c = ctx.config;
    CsvWriter csv(ctx.dir() / "svalues.csv", {"q", "form_id", "t", "S", "M", "R", "approx_main", "sigma_x",
                                              "sigma_status", "poly_term", "log_term", "error"});
    CsvWriter tcsv(ctx.dir() / "s_traces.csv", {"q", "form_id", "t_or_gamma", "value"});
    CsvWriter gcsv(ctx.dir() / "grh.csv", {"q", "form_id", "t", "ratio"});
    nlohmann::json grh = nlohmann::json::array();
    bool ok = true;
    AFEParams p;
    p.target_abs_error = c.afe_error;
    for (u64 q : c.q_list) {
        auto B = obtain_basis(q, c, ctx.log);
        auto rows = family_s_values(B, c);
        double max_ratio = 0;
        for (const auto& r : rows) {
            if (!r.error.empty()) continue;
            tcsv.row({cell(q), cell(r.form_id), cell(r.t), cell(r.S)});
            double ratio = grh_ratio(q, r.t, r.S);
            max_ratio = std::max(max_ratio, ratio);
            gcsv.row({cell(q), cell(r.form_id), cell(r.t), cell(ratio)});
        }
        grh.push_back({{"q", q}, {"max_ratio", cell(max_ratio)}});
        double x = selberg_x_for(q, c);
        std::vector<ApproxS> approx = parallel_map<ApproxS>(rows.size(), c.threads, [&](std::size_t k) {
            const auto& f = *std::find_if(B.forms.begin(), B.forms.end(), [&](const auto& g) { return g.id == rows[k].form_id; });
            LFunction L(f, c.t_max, c.afe_error);
            try {
                return approx_s(L, rows[k].t, x, p);
            } catch (const std::exception&) {
                return ApproxS{std::numeric_limits<double>::quiet_NaN()};
            }
        });
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& r = rows[k];
            if (!r.error.empty()) ok = false;
            csv.row({cell(q), cell(r.form_id), cell(r.t), cell(r.S), cell(r.M), cell(r.S - r.M), cell(approx[k].main),
                     cell(approx[k].sigma_x), to_string(approx[k].sigma_status), cell(approx[k].poly_term),
                     cell(approx[k].log_term), "\"" + r.error + "\""});
        }
    }
    write_json(ctx.dir() / "grh_summary.json", grh);
    return ok ? 0 : 1;
}

inline int cmd_moments(const CommandContext& ctx)
{
    const auto& c = ctx.config;
    CsvWriter csv(ctx.dir() / "moments.csv", {"q", "t", "n", "delta", "empirical_S", "empirical_M", "oracle",
                                              "predicted", "deviation", "off_diag_budget", "oracle_ok"});
    nlohmann::json summary;
    summary["rows"] = nlohmann::json::array();
    summary["failures"] = nlohmann::json::array();
    bool ok = true;
    for (u64 q : c.q_list) {
        auto B = obtain_basis(q, c, ctx.log);
        if (B.forms.empty()) continue;
        auto rows = family_s_values(B, c);
        for (double t : c.t_grid) {
            std::vector<double> S, M;
            for (const auto& r : rows) {
                if (r.t != t) continue;
                if (!r.error.empty()) {
                    summary["failures"].push_back({{"q", q}, {"form_id", r.form_id}, {"t", fmt15(t)}, {"error", r.error}});
                    ok = false;
                }
                S.push_back(r.S);
                M.push_back(r.M);
            }
            for (int n = 1; n <= c.n_max; ++n) {
                double eS = harmonic_moment(B, S, n), eM = harmonic_moment(B, M, n);
                auto orc = model_moment_oracle(B, n, t, c.delta);
                double pred = q >= 16 ? predicted_moment(n, q) : std::numeric_limits<double>::quiet_NaN();
                bool oracle_ok = std::fabs(eM - orc.value) <= 1e-8;
                ok = ok && oracle_ok;
                csv.row({cell(q), cell(t), cell(n), cell(c.delta), cell(eS), cell(eM), cell(orc.value), cell(pred),
                         cell(eS - pred), cell(orc.off_diag_budget), oracle_ok ? "1" : "0"});
                summary["rows"].push_back({{"q", q}, {"t", cell(t)}, {"n", n}, {"empirical_S", cell(eS)},
                                           {"empirical_M", cell(eM)}, {"oracle", cell(orc.value)},
                                           {"predicted", cell(pred)}, {"oracle_ok", oracle_ok}});
            }
        }
    }
    summary["pass"] = ok;
    write_json(ctx.dir() / "moments_summary.json", summary);
    return ok ? 0 : 1;
}

inline std::string distribution_file(u64 q, double t)
{
    return "distribution_q=" + std::to_string(q) + "_t=" + fmt15(t) + ".csv";
}

inline int cmd_distribution(const CommandContext& ctx)
{
    const auto& c = ctx.config;
    nlohmann::json summary = nlohmann::json::array();
    bool ok = true;
    for (u64 q : c.q_list) {
        auto B = obtain_basis(q, c, ctx.log);
        if (B.forms.empty()) continue;
        auto rows = family_s_values(B, c);
        for (double t : c.t_grid) {
            std::vector<double> S;
            for (const auto& r : rows)
                if (r.t == t) S.push_back(r.S);
            try {
                auto D = distribution_mu_q(B, t, S);
                CsvWriter csv(ctx.dir() / distribution_file(q, t), {"form_id", "xi", "weight"});
                for (const auto& s : D.samples) csv.row({cell(s.form_id), cell(s.xi), cell(s.weight)});
                nlohmann::json j{{"q", q}, {"t", cell(t)}, {"total_weight", cell(D.total_weight)},
                                 {"ks_distance", cell(D.ks_distance)}, {"mean", cell(D.mean())},
                                 {"variance", cell(D.variance())}, {"gaussian_variance", cell(gaussian_variance)}};
                j["moments"] = nlohmann::json::array();
                for (double m : D.moments) j["moments"].push_back(cell(m));
                summary.push_back(j);
            } catch (const InputError& e) {
                *ctx.log << "q=" << q << " t=" << t << ": " << e.what() << "\n";
                summary.push_back({{"q", q}, {"t", cell(t)}, {"error", e.what()}});
                ok = false;
            }
        }
    }
    write_json(ctx.dir() / "distribution_summary.json", summary);
    return ok ? 0 : 1;
}

inline int cmd_zeros(const CommandContext& ctx)
{
    const auto& c = ctx.config;
    CsvWriter zcsv(ctx.dir() / "zeros.csv", {"q", "form_id", "t_or_gamma", "value"});
    CsvWriter bcsv(ctx.dir() / "zero_boxes.csv", {"q", "form_id", "sigma", "T", "count", "boundary_arg_change"});
    CsvWriter dcsv(ctx.dir() / "zero_density.csv", {"q", "sigma", "T", "weighted_count", "lemma_shape"});
    bool ok = true;
    AFEParams p;
    p.target_abs_error = c.afe_error;
    for (u64 q : c.q_list) {
        auto B = obtain_basis(q, c, ctx.log);
        struct Out {
            CriticalZeros cz;
            std::vector<double> z_at_zero;
            std::vector<ZeroBox> boxes;
            std::string error;
        };
        auto res = parallel_map<Out>(B.forms.size(), c.threads, [&](std::size_t i) {
            Out o;
            try {
                LFunction L(B.forms[i], c.t_max, c.afe_error);
                o.cz = critical_zeros(L, c.zeros_T, p);
                for (double g : o.cz.ordinates) o.z_at_zero.push_back(hardy_z(L, g, p));
                for (double s : c.density_sigmas) o.boxes.push_back(zero_count_box(L, s, c.zeros_T, o.cz.ordinates, p));
            } catch (const std::exception& e) {
                o.error = e.what();
            }
            return o;
        });
        std::vector<CompensatedSum> wc(c.density_sigmas.size());
        for (std::size_t i = 0; i < B.forms.size(); ++i) {
            const auto& o = res[i];
            int id = B.forms[i].id;
            if (!o.error.empty()) {
                *ctx.log << "q=" << q << " form " << id << ": " << o.error << "\n";
                ok = false;
                continue;
            }
            for (std::size_t k = 0; k < o.cz.ordinates.size(); ++k)
                zcsv.row({cell(q), cell(id), cell(o.cz.ordinates[k]), cell(o.z_at_zero[k])});
            bcsv.row({cell(q), cell(id), "-1", cell(o.cz.strip.T), cell(o.cz.strip.count), cell(o.cz.strip.boundary_arg_change)});
            for (std::size_t k = 0; k < o.boxes.size(); ++k) {
                const auto& b = o.boxes[k];
                bcsv.row({cell(q), cell(id), cell(b.sigma_left), cell(b.T), cell(b.count), cell(b.boundary_arg_change)});
                wc[k] += B.forms[i].omega * b.count;
            }
        }
        for (std::size_t k = 0; k < c.density_sigmas.size(); ++k) {
            double s = c.density_sigmas[k], T = c.zeros_T;
            double shape = zero_density_shape(q, s, T, c.diag_c, c.diag_A);
            dcsv.row({cell(q), cell(s), cell(T), cell(wc[k].value()), cell(shape)});
        }
    }
    return ok ? 0 : 1;
}

inline int cmd_crosscheck(const CommandContext& ctx)
{
    const auto& c = ctx.config;
    LmfdbOptions lo;
    lo.url_template = c.lmfdb_url;
    lo.cache_dir = c.cache_dir;
    lo.offline = c.offline;
    nlohmann::json out = nlohmann::json::array();
    bool ok = true;
    for (u64 q : c.q_list) {
        nlohmann::json j{{"q", q}};
        try {
            auto B = obtain_basis(q, c, ctx.log);
            auto ing = fetch_newforms(q, lo);
            auto rep = crosscheck(B, ing, c.P_check);
            j["pass"] = rep.pass;
            j["pairs"] = nlohmann::json::array();
            for (const auto& pr : rep.pairs)
                j["pairs"].push_back({{"form_id", pr.form_id}, {"label", pr.label}, {"discrepancy", cell(pr.discrepancy)},
                                      {"worst_prime", pr.worst_prime}});
            ok = ok && rep.pass;
        } catch (const std::exception& e) {
            j["error"] = e.what();
            *ctx.log << "q=" << q << ": " << e.what() << "\n";
            ok = false;
        }
        out.push_back(j);
    }
    write_json(ctx.dir() / "crosscheck.json", out);
    return ok ? 0 : 1;
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("plotdata: missing input file " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (char ch : line) {
            if (ch == '"') quoted = !quoted;
            else if (ch == ',' && !quoted) { cells.push_back(cur); cur.clear(); }
            else cur += ch;
        }
        cells.push_back(cur);
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw InputError("plotdata: empty input file " + path.string());
    return rows;
}

inline std::size_t column(const std::vector<std::string>& header, const std::string& name, const std::filesystem::path& p)
{
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError("plotdata: column " + name + " missing in " + p.string());
    return it - header.begin();
}

} // namespace detail

inline double gaussian_limit_density(double xi) { return std::sqrt(pi) * std::exp(-pi * pi * xi * xi); }

// Step-function histogram of the raw weights: consecutive (x, height) points
// whose trapezoid integral is exactly the total weight.
inline std::vector<std::pair<double, double>> weighted_histogram(const std::vector<double>& xi,
                                                                 const std::vector<double>& w, int bins)
{
    double lo = *std::min_element(xi.begin(), xi.end()), hi = *std::max_element(xi.begin(), xi.end());
    double pad = std::max(0.05, 0.05 * (hi - lo));
    lo -= pad;
    hi += pad;
    double width = (hi - lo) / bins;
    std::vector<CompensatedSum> mass(bins);
    for (std::size_t i = 0; i < xi.size(); ++i) {
        int b = std::min(bins - 1, int((xi[i] - lo) / width));
        mass[b] += w[i];
    }
    std::vector<std::pair<double, double>> pts;
    for (int b = 0; b < bins; ++b) {
        double h = mass[b].value() / width;
        pts.push_back({lo + b * width, h});
        pts.push_back({lo + (b + 1) * width, h});
    }
    return pts;
}

inline int cmd_plotdata(const CommandContext& ctx)
{
    const auto& c = ctx.config;
    const auto dir = ctx.dir();
    // (i) moments against q
    {
        auto path = dir / "moments.csv";
        auto rows = detail::read_csv(path);
        auto& h = rows[0];
        auto iq = detail::column(h, "q", path), it = detail::column(h, "t", path), in = detail::column(h, "n", path);
        auto ie = detail::column(h, "empirical_S", path), ip = detail::column(h, "predicted", path);
        std::ofstream out(dir / "plot_moments_vs_q.dat");
        out << "# q t n empirical_S predicted\n";
        for (std::size_t r = 1; r < rows.size(); ++r)
            out << rows[r][iq] << " " << rows[r][it] << " " << rows[r][in] << " " << rows[r][ie] << " " << rows[r][ip] << "\n";
    }
    // (ii) μ_q histograms with the limiting density
    for (u64 q : c.q_list)
        for (double t : c.t_grid) {
            auto path = dir / distribution_file(q, t);
            auto rows = detail::read_csv(path);
            auto ix = detail::column(rows[0], "xi", path), iw = detail::column(rows[0], "weight", path);
            std::vector<double> xi, w;
            for (std::size_t r = 1; r < rows.size(); ++r) {
                xi.push_back(std::stod(rows[r][ix]));
                w.push_back(std::stod(rows[r][iw]));
            }
            auto pts = weighted_histogram(xi, w, c.hist_bins);
            std::ofstream out(dir / ("plot_histogram_q=" + std::to_string(q) + "_t=" + fmt15(t) + ".dat"));
            out << "# xi weighted_density gaussian_density\n";
            for (auto [x, y] : pts) out << fmt15(x) << " " << fmt15(y) << " " << fmt15(gaussian_limit_density(x)) << "\n";
        }
    // (iii) S traces against t
    {
        auto path = dir / "s_traces.csv";
        auto rows = detail::read_csv(path);
        auto& h = rows[0];
        auto iq = detail::column(h, "q", path), iid = detail::column(h, "form_id", path);
        auto it = detail::column(h, "t_or_gamma", path), is = detail::column(h, "value", path);
        std::ofstream out(dir / "plot_s_traces.dat");
        out << "# q form_id t S\n";
        for (std::size_t r = 1; r < rows.size(); ++r)
            out << rows[r][iq] << " " << rows[r][iid] << " " << rows[r][it] << " " << rows[r][is] << "\n";
    }
    return 0;
}

} // namespace sfarg
