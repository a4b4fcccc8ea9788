#include <gtest/gtest.h>

#include <sstream>

#include "sfarg/app.hpp"

using namespace sfarg;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig scratch_config(const std::string& name)
{
    RunConfig c;
    auto root = std::filesystem::temp_directory_path() / ("sfarg_app_" + name);
    std::filesystem::remove_all(root);
    c.cache_dir = (root / "cache").string();
    c.out_dir = (root / "out").string();
    c.t_max = 5;
    return c;
}

} // namespace

TEST(Config, JsonRoundTripAndAliases)
{
    RunConfig c;
    c.q_list = {11, 37};
    c.delta = 0.1;
    auto back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
    auto a = config_from_json(nlohmann::json::parse(R"({"q": 101, "t": 2.5})"));
    EXPECT_EQ(a.q_list, std::vector<u64>{101});
    EXPECT_EQ(a.t_grid, std::vector<double>{2.5});
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"qlist": [11]})")), InputError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"q": 11, "q_list": [11]})")), InputError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"delta": "small"})")), InputError);
    RunConfig c;
    EXPECT_NO_THROW(validate(c));
    c.delta = 0.25; // = 1/n_max
    EXPECT_THROW(validate(c), InputError);
    c.n_max = 3;
    EXPECT_NO_THROW(validate(c));
    c.t_grid = {0.0};
    EXPECT_THROW(validate(c), InputError);
    c.t_grid = {1.0};
    c.threads = 0;
    EXPECT_THROW(validate(c), InputError);
}

TEST(Config, StampIgnoresPlumbing)
{
    RunConfig a, b;
    b.threads = 8;
    b.out_dir = "elsewhere";
    b.cache_dir = "c2";
    b.offline = true;
    EXPECT_EQ(run_stamp(a), run_stamp(b));
    b.delta = 0.21;
    EXPECT_NE(run_stamp(a), run_stamp(b));
    EXPECT_EQ(run_stamp(a).rfind("run-", 0), 0u);
}

TEST(Parallel, OrderIndependentOfThreads)
{
    std::function<double(std::size_t)> fn = [](std::size_t i) { return std::sin(double(i)) * double(i); };
    auto one = parallel_map<double>(1000, 1, fn);
    auto many = parallel_map<double>(1000, 7, fn);
    EXPECT_EQ(one, many);
    EXPECT_TRUE(parallel_map<double>(0, 4, fn).empty());
}

TEST(PlotData, HistogramConservesMass)
{
    std::vector<double> xi{-0.3, -0.1, 0.0, 0.0, 0.25, 0.4}, w{0.1, 0.2, 0.05, 0.3, 0.15, 0.19};
    auto pts = weighted_histogram(xi, w, 7);
    double area = 0;
    for (std::size_t k = 1; k < pts.size(); ++k)
        area += 0.5 * (pts[k].second + pts[k - 1].second) * (pts[k].first - pts[k - 1].first);
    EXPECT_NEAR(area, 0.99, 1e-12);
    EXPECT_NEAR(gaussian_limit_density(0), 1.7724538509055159, 1e-15);
    // √π e^{−π²ξ²} is the density of N(0, 1/(2π²))
    EXPECT_NEAR(gaussian_limit_density(0.1),
                std::exp(-0.01 / (2 * gaussian_variance)) / std::sqrt(2 * pi * gaussian_variance), 1e-14);
}

TEST(Commands, BasisSummaryAndErrors)
{
    auto c = scratch_config("basis");
    c.q_list = {11, 13, 15};
    std::ostringstream log;
    CommandContext ctx{c, &log};
    EXPECT_EQ(cmd_basis(ctx), 1); // 15 is not prime
    auto j = nlohmann::json::parse(slurp(ctx.dir() / "basis_summary.json"));
    ASSERT_EQ(j["levels"].size(), 2u);
    EXPECT_EQ(j["levels"][0]["dim"], 1);
    EXPECT_TRUE(j["levels"][0]["pass"].get<bool>());
    EXPECT_EQ(j["levels"][1]["dim"], 0);
    EXPECT_TRUE(j["levels"][1].contains("note"));
    EXPECT_EQ(j["errors"][0]["q"], 15);

    c.q_list = {11, 13};
    ctx.config = c;
    EXPECT_EQ(cmd_basis(ctx), 0);
    auto first = slurp(ctx.dir() / "basis_summary.json");
    EXPECT_NE(log.str().find("computing"), std::string::npos);
    log.str("");
    EXPECT_EQ(cmd_basis(ctx), 0);
    EXPECT_NE(log.str().find("loaded from cache"), std::string::npos);
    EXPECT_EQ(slurp(ctx.dir() / "basis_summary.json"), first);
}

TEST(Commands, MomentsPipelineDeterministic)
{
    auto c = scratch_config("moments");
    c.q_list = {101};
    c.t_grid = {1.0};
    std::ostringstream log;
    CommandContext ctx{c, &log};
    EXPECT_EQ(cmd_svalue(ctx), 0);
    EXPECT_EQ(cmd_moments(ctx), 0);
    EXPECT_EQ(cmd_distribution(ctx), 0);
    EXPECT_EQ(cmd_plotdata(ctx), 0);
    auto moments = slurp(ctx.dir() / "moments.csv");
    EXPECT_EQ(moments.rfind("q,t,n,delta,", 0), 0u);
    auto hist = slurp(ctx.dir() / "plot_histogram_q=101_t=1.dat");

    ctx.config.threads = 3;
    EXPECT_EQ(cmd_svalue(ctx), 0);
    EXPECT_EQ(cmd_moments(ctx), 0);
    EXPECT_EQ(cmd_distribution(ctx), 0);
    EXPECT_EQ(cmd_plotdata(ctx), 0);
    EXPECT_EQ(slurp(ctx.dir() / "moments.csv"), moments);
    EXPECT_EQ(slurp(ctx.dir() / "plot_histogram_q=101_t=1.dat"), hist);

    // mass of the histogram equals Σω
    std::istringstream in(hist);
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<double, double>> pts;
    for (double x, y, g; in >> x >> y >> g;) pts.push_back({x, y});
    double area = 0;
    for (std::size_t k = 1; k < pts.size(); ++k)
        area += 0.5 * (pts[k].second + pts[k - 1].second) * (pts[k].first - pts[k - 1].first);
    auto B = obtain_basis(101, c);
    double tw = 0;
    for (const auto& f : B.forms) tw += f.omega;
    EXPECT_NEAR(area, tw, 1e-6);
}

TEST(Commands, PlotdataNamesMissingInput)
{
    auto c = scratch_config("plot");
    CommandContext ctx{c};
    try {
        cmd_plotdata(ctx);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("moments.csv"), std::string::npos);
    }
}

TEST(Commands, PrintConfigShowsDefaults)
{
    std::ostringstream out;
    EXPECT_EQ(cmd_print_config(RunConfig{}, out), 0);
    auto j = nlohmann::json::parse(out.str());
    EXPECT_EQ(j["delta"], 0.2);
    EXPECT_EQ(j["diag_c"], 0.25);
    EXPECT_EQ(j["diag_A"], 4);
}
