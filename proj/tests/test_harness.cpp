#include <doctest.h>

#include "segregate/error.hpp"
#include "segregate/harness.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace segregate;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("segregate_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "segregate");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

json cubic_doc()
{
    return {{"n", 3}, {"d", 3}, {"nu", 3.0}, {"v_inf", 1.0}, {"beta_fraction_of_beta_k", 0.5}, {"k", 64}};
}

std::string invalid_message(const json& doc, const std::string& command)
{
    try {
        parse_config(doc, command);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConfigInvalid);
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("physical parameters have no defaults")
{
    for (const char* key : {"n", "d", "nu", "v_inf"}) {
        json doc = cubic_doc();
        doc.erase(key);
        CHECK(invalid_message(doc, "find-rho").find(std::string("'") + key + "'") != std::string::npos);
    }
    json doc = cubic_doc();
    doc.erase("beta_fraction_of_beta_k");
    CHECK(invalid_message(doc, "find-rho").find("'beta'") != std::string::npos);
    // scalar commands only need n
    CHECK_NOTHROW(parse_config(json{{"n", 2}}, "ground-state"));
}

TEST_CASE("config errors are reported per field")
{
    json doc = cubic_doc();
    doc["nu"] = "three";
    doc["colour"] = 1;
    doc["beta"] = 0.1;
    std::string msg = invalid_message(doc, "find-rho");
    CHECK(msg.find("'nu'") != std::string::npos);
    CHECK(msg.find("'colour'") != std::string::npos);
    CHECK(msg.find("give only one") != std::string::npos);
}

TEST_CASE("beta fraction resolves per k")
{
    auto cfg = parse_config(cubic_doc(), "find-rho");
    CHECK(params_for(cfg, 64).beta == doctest::Approx(0.5 * std::pow(64.0, -1.25)));
    CHECK(params_for(cfg, 128).beta == doctest::Approx(0.5 * std::pow(128.0, -1.25)));
}

TEST_CASE("config hash is stable and sensitive")
{
    json a = cubic_doc(), b = cubic_doc();
    CHECK(config_hash(a) == config_hash(b));
    b["k"] = 65;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("doubles are written with 17 significant digits")
{
    double v = 0.1 + 0.2;
    std::string s = format_double(v);
    CHECK(std::stod(s) == v);
    CHECK(s == "0.30000000000000004");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("csv writer keeps a fixed header and width")
{
    auto dir = scratch("csv");
    {
        CsvWriter w((dir / "a.csv").string(), {"x", "y"});
        w.row({1.5, 2.0});
        CHECK_THROWS_AS(w.row(std::vector<double>{1.0}), Error);
    }
    CHECK(slurp(dir / "a.csv") == "x,y\n1.5,2\n");
}

TEST_CASE("missing config exits with status 1")
{
    CHECK(cli({"find-rho", "--config", "/nonexistent/cfg.json"}) == 1);
    CHECK(cli({"no-such-command"}) == 1);
}

TEST_CASE("ground-state runs reproduce byte-identical csv and the same manifest hash")
{
    auto dir = scratch("gs");
    {
        std::ofstream f(dir / "cfg.json");
        f << json{{"n", 2}, {"p", 3.0}, {"options", {{"points", 500}}}}.dump();
    }
    auto out1 = dir / "a", out2 = dir / "b";
    REQUIRE(cli({"ground-state", "--config", (dir / "cfg.json").string(), "--out", out1.string()}) == 0);
    REQUIRE(cli({"ground-state", "--config", (dir / "cfg.json").string(), "--out", out2.string()}) == 0);
    CHECK(slurp(out1 / "ground_state.csv") == slurp(out2 / "ground_state.csv"));
    json m1 = json::parse(slurp(out1 / "manifest.json")), m2 = json::parse(slurp(out2 / "manifest.json"));
    CHECK(m1["config_hash"] == m2["config_hash"]);
    CHECK(m1["command"] == "ground-state");
    CHECK(slurp(out1 / "ground_state.csv").rfind("r,U,dU\n", 0) == 0);
}

TEST_CASE("find-rho writes the root, the admissibility report and the constants used")
{
    auto dir = scratch("find");
    {
        std::ofstream f(dir / "cfg.json");
        f << cubic_doc().dump();
    }
    REQUIRE(cli({"find-rho", "--config", (dir / "cfg.json").string(), "--out", dir.string()}) == 0);
    json r = json::parse(slurp(dir / "find_rho.json"));
    const auto& root = r["roots"][0];
    CHECK(root["predicted_ratio"].get<double>() == doctest::Approx(9.0 / (4 * std::numbers::pi)));
    double rs = root["r_star"];
    CHECK(rs > root["bracket"][0].get<double>());
    CHECK(rs < root["bracket"][1].get<double>());
    CHECK(root["admissibility"]["mode"] == "cubic-main");
    json m = json::parse(slurp(dir / "manifest.json"));
    auto lc = leading_from_json(m["leading_constants"]);
    CHECK(lc.mass > 0.0);
    CHECK(lc.cross_law.log_flag);
}

TEST_CASE("inadmissible configs are refused before the root search")
{
    auto dir = scratch("inadm");
    json doc = cubic_doc();
    doc["v_inf"] = -1.0;
    {
        std::ofstream f(dir / "cfg.json");
        f << doc.dump();
    }
    CHECK(cli({"find-rho", "--config", (dir / "cfg.json").string(), "--out", dir.string()}) == 1);
}

TEST_CASE("leading constants are cached under SEGREGATE_CACHE")
{
    auto dir = scratch("cache");
    setenv("SEGREGATE_CACHE", dir.string().c_str(), 1);
    auto U = solve_ground_state(3, 3.0);
    SystemParams s;
    s.n = 3;
    auto a = cached_leading_constants(s, U);
    std::size_t files = std::distance(fs::directory_iterator(dir), fs::directory_iterator());
    auto b = cached_leading_constants(s, U);
    unsetenv("SEGREGATE_CACHE");
    CHECK(files == 1);
    CHECK(a.same_c == b.same_c);
    CHECK(a.cross.rate == b.cross.rate);
}
