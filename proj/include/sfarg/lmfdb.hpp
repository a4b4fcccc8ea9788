#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

// Eigen before httplib: <resolv.h> defines a macro named _res
#include "hecke.hpp"

#include <httplib.h>
#include <json.hpp>

namespace sfarg {

struct IngestedForm {
    u64 q = 0;
    std::string label;
    std::vector<std::uint32_t> primes;
    std::vector<double> lambda; // a_p/√p
    std::string source_url;
    std::string fetched_at;
    double hecke_residual = 0; // max |λ(m)λ(n) − λ(mn)| over coprime m,n in the payload
    bool operator==(const IngestedForm&) const = default;
};

// {q} is replaced by the level. Complex embeddings carry a_n/√n as [re, im] pairs.
inline const std::string default_lmfdb_url =
    "https://www.lmfdb.org/api/mf_hecke_cc/?_format=json&_fields=label,an_normalized&label=~^{q}\\.2\\.a\\.";

struct LmfdbOptions {
    std::string url_template = default_lmfdb_url;
    std::filesystem::path cache_dir = "cache";
    bool offline = false;
    int min_interval_ms = 500;
    int max_retries = 4;
    int timeout_s = 30;
};

struct LmfdbError : InputError {
    using InputError::InputError;
};

namespace detail {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;   // /path?query
};

inline SplitUrl split_url(const std::string& url)
{
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw LmfdbError("lmfdb: malformed url " + url);
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

inline std::string utc_now()
{
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string excerpt(const std::string& s) { return s.size() <= 200 ? s : s.substr(0, 200) + "..."; }

} // namespace detail

struct LmfdbPage {
    std::vector<IngestedForm> forms;
    std::optional<std::string> next; // absolute or origin-relative
};

// Keeps trivial-character weight-2 embeddings of level q; λ(p) = Re an_normalized[p−1].
inline LmfdbPage parse_lmfdb_payload(const std::string& body, u64 q, const std::string& source_url,
                                     const std::string& fetched_at)
{
    LmfdbPage page;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw LmfdbError(std::string("lmfdb: unparsable payload (") + e.what() + "): " + detail::excerpt(body));
    }
    if (!j.is_object() || !j.contains("data") || !j["data"].is_array())
        throw LmfdbError("lmfdb: payload without a data array: " + detail::excerpt(body));
    const std::string prefix = std::to_string(q) + ".2.a.";
    try {
        for (const auto& e : j["data"]) {
            auto label = e.at("label").get<std::string>();
            if (label.rfind(prefix, 0) != 0) continue;
            const auto& an = e.at("an_normalized");
            std::vector<double> a(an.size() + 1, 0.0);
            for (std::size_t n = 1; n <= an.size(); ++n) {
                const auto& v = an[n - 1];
                a[n] = v.is_array() ? v.at(0).get<double>() : v.get<double>();
            }
            IngestedForm f;
            f.q = q;
            f.label = label;
            f.source_url = source_url;
            f.fetched_at = fetched_at;
            for (std::size_t n = 2; n < a.size(); ++n) {
                if (!is_prime_u64(n)) continue;
                double l = canonical(a[n]);
                if (std::fabs(l) > 2 + 1e-8)
                    throw LmfdbError("lmfdb: " + label + " violates the Deligne bound at p=" + std::to_string(n));
                f.primes.push_back(std::uint32_t(n));
                f.lambda.push_back(l);
            }
            for (std::size_t m = 2; m < a.size(); ++m)
                for (std::size_t n = 2; m * n < a.size(); ++n)
                    if (std::gcd(m, n) == 1) f.hecke_residual = std::max(f.hecke_residual, std::fabs(a[m] * a[n] - a[m * n]));
            f.hecke_residual = canonical(f.hecke_residual);
            page.forms.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        throw LmfdbError(std::string("lmfdb: malformed entry (") + e.what() + "): " + detail::excerpt(body));
    }
    if (j.contains("next") && j["next"].is_string() && !j["next"].get<std::string>().empty())
        page.next = j["next"].get<std::string>();
    return page;
}

inline std::filesystem::path lmfdb_cache_path(const std::filesystem::path& cache_dir, u64 q)
{
    return cache_dir / "lmfdb" / ("q=" + std::to_string(q) + ".json");
}

inline nlohmann::json ingested_to_json(u64 q, const std::vector<IngestedForm>& forms)
{
    nlohmann::json j;
    j["q"] = q;
    j["dim"] = forms.size();
    j["forms"] = nlohmann::json::array();
    for (std::size_t i = 0; i < forms.size(); ++i) {
        const auto& f = forms[i];
        nlohmann::json jf;
        jf["id"] = i;
        jf["label"] = f.label;
        jf["source_url"] = f.source_url;
        jf["fetched_at"] = f.fetched_at;
        jf["hecke_residual"] = fmt15(f.hecke_residual);
        auto lam = nlohmann::json::array();
        for (std::size_t k = 0; k < f.primes.size(); ++k) lam.push_back({f.primes[k], fmt15(f.lambda[k])});
        jf["lambda"] = std::move(lam);
        j["forms"].push_back(std::move(jf));
    }
    return j;
}

inline std::vector<IngestedForm> ingested_from_json(const nlohmann::json& j)
{
    std::vector<IngestedForm> out;
    try {
        u64 q = j.at("q").get<u64>();
        for (const auto& jf : j.at("forms")) {
            IngestedForm f;
            f.q = q;
            f.label = jf.at("label").get<std::string>();
            f.source_url = jf.at("source_url").get<std::string>();
            f.fetched_at = jf.at("fetched_at").get<std::string>();
            f.hecke_residual = std::stod(jf.at("hecke_residual").get<std::string>());
            for (const auto& e : jf.at("lambda")) {
                f.primes.push_back(e.at(0).get<std::uint32_t>());
                f.lambda.push_back(std::stod(e.at(1).get<std::string>()));
            }
            out.push_back(std::move(f));
        }
    } catch (const std::exception& e) {
        throw LmfdbError(std::string("lmfdb cache: malformed document: ") + e.what());
    }
    return out;
}

inline std::optional<std::vector<IngestedForm>> load_lmfdb_cache(const std::filesystem::path& cache_dir, u64 q)
{
    auto path = lmfdb_cache_path(cache_dir, q);
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw LmfdbError("lmfdb cache " + path.string() + ": " + e.what());
    }
    return ingested_from_json(j);
}

inline void save_lmfdb_cache(const std::filesystem::path& cache_dir, u64 q, const std::vector<IngestedForm>& forms)
{
    auto path = lmfdb_cache_path(cache_dir, q);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << ingested_to_json(q, forms).dump(1) << "\n";
    if (!out) throw LmfdbError("cannot write " + path.string());
}

inline std::string lmfdb_url(const std::string& tmpl, u64 q)
{
    std::string s = tmpl;
    for (std::size_t pos; (pos = s.find("{q}")) != std::string::npos;) s.replace(pos, 3, std::to_string(q));
    return s;
}

// Cache first; otherwise GET with pacing and exponential backoff, following "next" links.
inline std::vector<IngestedForm> fetch_newforms(u64 q, const LmfdbOptions& opt = {})
{
    if (!is_prime_u64(q)) throw InputError("fetch_newforms: q must be prime");
    if (auto cached = load_lmfdb_cache(opt.cache_dir, q)) return *cached;
    if (dimension(q) == 0) {
        save_lmfdb_cache(opt.cache_dir, q, {});
        return {};
    }
    if (opt.offline)
        throw LmfdbError("lmfdb: offline and no cache at " + lmfdb_cache_path(opt.cache_dir, q).string());

    std::vector<IngestedForm> forms;
    std::string url = lmfdb_url(opt.url_template, q);
    const auto fetched_at = detail::utc_now();
    auto last = std::chrono::steady_clock::now() - std::chrono::milliseconds(opt.min_interval_ms);
    for (int page = 0; page < 1000; ++page) {
        auto parts = detail::split_url(url);
        httplib::Client cli(parts.origin);
        cli.set_connection_timeout(opt.timeout_s);
        cli.set_read_timeout(opt.timeout_s);
        cli.set_follow_location(true);
        std::string body;
        for (int attempt = 0;; ++attempt) {
            std::this_thread::sleep_until(last + std::chrono::milliseconds(opt.min_interval_ms));
            last = std::chrono::steady_clock::now();
            auto res = cli.Get(parts.path);
            if (res && res->status == 200) {
                body = res->body;
                break;
            }
            if (attempt + 1 >= opt.max_retries) {
                std::string why = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
                throw LmfdbError("lmfdb: request to " + url + " failed (" + why +
                                 ") and no cache exists; populate the cache or rerun with --offline");
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(opt.min_interval_ms << attempt));
        }
        auto pg = parse_lmfdb_payload(body, q, url, fetched_at);
        for (auto& f : pg.forms) forms.push_back(std::move(f));
        if (!pg.next) break;
        url = pg.next->rfind("http", 0) == 0 ? *pg.next : parts.origin + *pg.next;
    }
    std::sort(forms.begin(), forms.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
    save_lmfdb_cache(opt.cache_dir, q, forms);
    return *load_lmfdb_cache(opt.cache_dir, q);
}

struct CrosscheckPair {
    int form_id;
    std::string label;
    double discrepancy;
    u64 worst_prime;
};

struct CrosscheckReport {
    u64 q = 0;
    u64 P_check = 0;
    std::vector<CrosscheckPair> pairs; // ordered by form id
    bool pass = true;
};

inline CrosscheckReport crosscheck(const EigenBasis& B, std::vector<IngestedForm> ingested, u64 P_check,
                                   double tolerance = 1e-6)
{
    if (ingested.size() != B.forms.size())
        throw NumericalError("crosscheck: " + std::to_string(B.forms.size()) + " computed forms vs " +
                             std::to_string(ingested.size()) + " ingested (dimension mismatch)");
    std::sort(ingested.begin(), ingested.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
    const std::size_t n = ingested.size();
    struct D { double d; u64 p; };
    std::vector<D> dist(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            D best{0, 0};
            const auto& g = ingested[k];
            for (std::size_t j = 0; j < g.primes.size() && g.primes[j] <= P_check; ++j) {
                double d = std::fabs(B.forms[i].lambda_p(g.primes[j]) - g.lambda[j]);
                if (best.p == 0 || d > best.d) best = {d, g.primes[j]};
            }
            dist[i * n + k] = best;
        }
    CrosscheckReport rep;
    rep.q = B.q;
    rep.P_check = P_check;
    std::vector<bool> used_i(n, false), used_k(n, false);
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t bi = 0, bk = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                if (!used_i[i] && !used_k[k] && dist[i * n + k].d < bd) {
                    bd = dist[i * n + k].d;
                    bi = i;
                    bk = k;
                }
        used_i[bi] = used_k[bk] = true;
        rep.pairs.push_back({B.forms[bi].id, ingested[bk].label, bd, dist[bi * n + bk].p});
        if (bd > tolerance) rep.pass = false;
    }
    std::sort(rep.pairs.begin(), rep.pairs.end(), [](const auto& a, const auto& b) { return a.form_id < b.form_id; });
    return rep;
}

} // namespace sfarg
