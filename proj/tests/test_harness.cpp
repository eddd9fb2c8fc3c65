#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include <sojourn/experiment.hpp>

using namespace sojourn;
namespace fs = std::filesystem;

namespace {
std::string tmpdir(const std::string& name)
{
    auto p = fs::path(::testing::TempDir()) / ("sojourn_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string write_json(const std::string& dir, const json& j)
{
    std::string path = dir + "/config.json";
    std::ofstream(path) << j.dump(2);
    return path;
}

int cli(const std::string& args)
{
    std::string cmd = std::string(SOJOURN_CLI) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string message_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

// a fast variance run: four horizons, separable model
json small_variance()
{
    auto j = to_json(preset("clt-m1"));
    j["variance"]["T_list"] = {8, 16, 32, 64};
    return j;
}

ExperimentConfig tiny_experiment()
{
    auto c = preset("clt-m1");
    c.grid = {0.25, 1.0, 64, {16, 64}};
    c.replicates = 40;
    return c;
}
} // namespace

TEST(Config, PresetsRoundTrip)
{
    for (const auto& n : preset_names()) {
        auto c = preset(n);
        auto j = to_json(c);
        auto back = config_from_json(j);
        EXPECT_EQ(to_json(back), j) << n;
        EXPECT_EQ(config_hash(back), config_hash(c)) << n;
    }
    EXPECT_THROW(preset("nope"), ConfigError);
}

TEST(Config, HashTracksContent)
{
    auto a = preset("clt-m1"), b = a;
    b.seed = 1;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, SeedIsMandatory)
{
    auto j = to_json(preset("clt-m1"));
    j.erase("seed");
    EXPECT_NE(message_of([&] { config_from_json(j); }).find("seed"), std::string::npos);
    j["seed"] = nullptr;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j["seed"] = -4;
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(Config, UnknownKeysNamed)
{
    auto j = to_json(preset("clt-m1"));
    j["model"]["alhpa"] = 0.3;
    EXPECT_NE(message_of([&] { config_from_json(j); }).find("model.alhpa"), std::string::npos);
    auto k = to_json(preset("clt-m1"));
    k["grid"]["h"] = "small";
    EXPECT_NE(message_of([&] { config_from_json(k); }).find("grid.h"), std::string::npos);
}

TEST(Config, ValidationNamesParameter)
{
    auto check = [](ExperimentConfig c, Mode m, const std::string& param) {
        auto msg = message_of([&] { validate(c, m); });
        EXPECT_EQ(msg.rfind(param, 0), 0u) << msg;
    };
    auto c = preset("clt-m1");
    c.grid.h = 0.75;
    check(c, Mode::experiment, "grid.h");
    c = preset("clt-m1");
    c.replicates = 5;
    check(c, Mode::experiment, "replicates");
    c = preset("reduction-m2");
    c.functional.u = 0.0;
    check(c, Mode::experiment, "functional.u");
    c = preset("clt-m1");
    c.grid.T_list = {64, 32};
    check(c, Mode::experiment, "grid.T_list");
    c = preset("clt-m1");
    c.sampler = "cholesky";
    check(c, Mode::experiment, "sampler");
    c = preset("clt-m1");
    c.model.alpha = 1.5;
    check(c, Mode::covariance, "model");
    c = preset("clt-m1");
    c.model.alpha = 0.7;
    check(c, Mode::rosenblatt, "model.alpha");
    c = preset("gneiting-variance");
    c.variance.T_list = {1, 2};
    check(c, Mode::variance, "variance.T_list");
    c = preset("clt-m1");
    c.normalization = "other";
    check(c, Mode::density, "normalization");
    EXPECT_THROW(parse_mode("plot"), ConfigError);
}

TEST(Output, NumberFormatting)
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02e23}) EXPECT_EQ(std::stod(fmt_num(v)), v);
    EXPECT_EQ(fmt_num(std::nan("")), "nan");
    EXPECT_EQ(fmt_seed({1, 2}), "00000000000000020000000000000001");
}

TEST(Output, CsvQuoting)
{
    Table t;
    t.header = {"a", "b"};
    t.add({"x,y", "say \"hi\""});
    EXPECT_EQ(to_csv(t), "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
}

TEST(Experiment, ThreadCountDoesNotChangeResults)
{
    auto c = tiny_experiment();
    auto a = run_experiment(c, 1), b = run_experiment(c, 3);
    ASSERT_EQ(a.rows.size(), 80u);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].s.M1, b.rows[i].s.M1);
        EXPECT_EQ(a.rows[i].s.X1_tc, b.rows[i].s.X1_tc);
        EXPECT_EQ(a.rows[i].Y, b.rows[i].Y);
    }
    EXPECT_EQ(a.horizons.size(), 2u);
    EXPECT_EQ(a.rank, 1);
    EXPECT_EQ(to_csv(experiment_output(a).tables.at("replicates")), to_csv(experiment_output(b).tables.at("replicates")));
}

TEST(Experiment, PrefixHorizonsShareTheField)
{
    auto c = tiny_experiment();
    auto r = run_experiment(c, 1);
    // M1 over the first 16 steps never exceeds M1 over all 64
    for (std::size_t i = 0; i < r.rows.size(); i += 2) EXPECT_LE(r.rows[i].s.M1, r.rows[i + 1].s.M1 + 1e-12);
}

TEST(Cli, ExitCodes)
{
    auto dir = tmpdir("codes");
    auto j = small_variance();
    j.erase("seed");
    EXPECT_EQ(cli("variance --config " + write_json(dir, j) + " --out " + dir), 2);
    EXPECT_EQ(cli("variance --config " + dir + "/missing.json"), 2);
    EXPECT_EQ(cli("variance"), 2);
    EXPECT_EQ(cli("bogus"), 2);
    auto k = small_variance();
    k["model"]["spatial"]["kind"] = "gaussian";
    EXPECT_EQ(cli("variance --config " + write_json(dir, k) + " --out " + dir), 2);

    auto g = small_variance();
    g["variance"]["slope_tol"] = 1e-12;
    auto path = write_json(dir, g);
    EXPECT_EQ(cli("variance --config " + path + " --out " + dir), 0);
    EXPECT_EQ(cli("variance --config " + path + " --out " + dir + " --gate"), 4);
    EXPECT_EQ(cli("variance --config " + path + " --out " + dir + " --seed 7"), 0);
    EXPECT_TRUE(fs::exists(dir + "/variance.csv"));
    EXPECT_TRUE(fs::exists(dir + "/summary.json"));
}

TEST(Cli, OutputsAreReproducible)
{
    auto a = tmpdir("rep_a"), b = tmpdir("rep_b");
    auto j = to_json(preset("clt-m1"));
    j["grid"] = {{"h", 0.25}, {"dt", 1.0}, {"n_t", 64}, {"T_list", {16, 64}}};
    j["replicates"] = 40;
    auto path = write_json(a, j);
    ASSERT_EQ(cli("experiment --config " + path + " --out " + a + "/o --threads 1"), 0);
    ASSERT_EQ(cli("experiment --config " + path + " --out " + b + "/o --threads 2"), 0);
    for (const auto& e : fs::directory_iterator(a + "/o")) {
        auto name = e.path().filename().string();
        EXPECT_EQ(slurp(e.path().string()), slurp(b + "/o/" + name)) << name;
    }
    auto s = json::parse(slurp(a + "/o/summary.json"));
    EXPECT_EQ(s["config_hash"], config_hash(config_from_json(j)));
    EXPECT_TRUE(s.contains("gates"));
}

TEST(Cli, SimulateBinaryField)
{
    auto dir = tmpdir("sim");
    auto j = to_json(preset("clt-m1"));
    j["grid"] = {{"h", 0.25}, {"dt", 1.0}, {"n_t", 32}, {"T_list", json::array()}};
    j["output"] = {{"dir", dir}, {"binary_field", true}};
    ASSERT_EQ(cli("simulate --config " + write_json(dir, j)), 0);
    auto bin = slurp(dir + "/field.bin");
    EXPECT_EQ(bin.size(), 8 + 24 + 8 * (4 + 4 * 32));
    EXPECT_EQ(bin.substr(0, 8), "SOJFIELD");
}
