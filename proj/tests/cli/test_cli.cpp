// Runs the tikmeans executable named by $TIKMEANS_CLI.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
};

std::string cli() {
    const char* p = std::getenv("TIKMEANS_CLI");
    REQUIRE_MESSAGE(p != nullptr, "TIKMEANS_CLI not set");
    return p;
}

fs::path data(const std::string& name) { return fs::path(TIK_DATA_DIR) / name; }

fs::path scratch(const std::string& name) {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("tikmeans_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir / name;
}

Run run(const std::string& args) {
    const std::string cmd = cli() + " " + args + " 2>" + scratch("stderr.txt").string();
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    const int status = ::pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string stderr_text() {
    std::ifstream in(scratch("stderr.txt"));
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Structural check of a cluster report (schema version 1).
void validate_report(const json& r) {
    REQUIRE(r.is_object());
    CHECK(r.at("schema_version") == 1);
    CHECK(r.at("command") == "cluster");
    const auto& c = r.at("config");
    for (const char* key : {"input", "lambda_mode", "step_type", "scale"}) CHECK(c.at(key).is_string());
    for (const char* key : {"k", "starts", "shared_starts", "max_iter", "seed"}) CHECK(c.at(key).is_number_integer());
    CHECK(c.at("grid").is_array());
    CHECK(c.at("shift_positive").is_boolean());
    CHECK(r.at("preprocessing").is_object());
    const auto& m = r.at("model");
    const int k = m.at("k").get<int>();
    CHECK(m.at("labels").is_array());
    for (const auto& l : m.at("labels")) {
        CHECK(l.get<int>() >= 1);
        CHECK(l.get<int>() <= k);
    }
    CHECK(m.at("lambda").is_array());
    CHECK((m.at("lambda").size() == 1 || m.at("lambda").size() == static_cast<std::size_t>(k)));
    CHECK(m.at("centers").size() == static_cast<std::size_t>(k));
    CHECK(m.at("centers_transformed").size() == static_cast<std::size_t>(k));
    CHECK((m.at("objective").is_number() || m.at("objective").is_null()));
    CHECK(m.at("wss").is_number());
    CHECK(m.at("iterations").is_number_integer());
    for (const char* key : {"converged", "cycle_detected", "degenerate"}) CHECK(m.at(key).is_boolean());
    if (r.contains("evaluation")) {
        CHECK(r["evaluation"].at("ari").is_number());
        const auto& cm = r["evaluation"].at("confusion");
        std::size_t total = 0;
        for (const auto& row : cm.at("counts"))
            for (const auto& v : row) total += v.get<std::size_t>();
        CHECK(total == m.at("labels").size());
    }
    CHECK(r.at("warnings").is_array());
    CHECK(r.at("timing").at("seconds").is_number());
}

json report_of(const Run& r) {
    json j = json::parse(r.out);
    validate_report(j);
    return j;
}

json without_timing(json j) {
    j.erase("timing");
    return j;
}

}  // namespace

TEST_CASE("cluster wine, shared mode") {
    const auto r = run("cluster --input " + data("wine.csv").string() + " --k 3 --lambda-mode shared --labels class");
    REQUIRE(r.code == 0);
    const json j = report_of(r);
    CHECK(j["evaluation"]["ari"].get<double>() == doctest::Approx(0.854).epsilon(0.01));
    CHECK(j["config"]["starts"] == 100);
    CHECK(j["config"]["grid"].size() == 40);
    CHECK(j["model"]["lambda"].size() == 1);
}

TEST_CASE("same seed gives the same report; thread count does not matter") {
    const std::string base = "cluster --input " + data("iris.csv").string() + " --k 3 --labels species --starts 20 --seed 7";
    const auto a = run(base + " --threads 1");
    const auto b = run(base + " --threads 1");
    const auto c = run(base + " --threads 3");
    REQUIRE(a.code == 0);
    CHECK(without_timing(report_of(a)).dump() == without_timing(report_of(b)).dump());
    CHECK(without_timing(report_of(a)).dump() == without_timing(report_of(c)).dump());
    const auto d = run("cluster --input " + data("iris.csv").string() + " --k 3 --labels species --starts 20 --seed 7");
    CHECK(without_timing(report_of(a)).dump() == without_timing(report_of(d)).dump());
}

TEST_CASE("toy preset: K-means fails, TiK-means recovers") {
    const auto toy = scratch("toy.csv");
    REQUIRE(run("simulate --preset paper-toy --seed 1 --output " + toy.string()).code == 0);
    const auto km = run("cluster --input " + toy.string() + " --k 2 --lambda-mode none --labels label");
    REQUIRE(km.code == 0);
    CHECK(report_of(km)["evaluation"]["ari"].get<double>() < 0.1);
    const auto tk = run("cluster --input " + toy.string() + " --k 2 --lambda-mode per-cluster --labels label");
    REQUIRE(tk.code == 0);
    const json j = report_of(tk);
    CHECK(j["evaluation"]["ari"] == 1.0);
    CHECK(j["model"]["lambda"].size() == 2);
    CHECK(j["config"]["starts"] == 20);
}

TEST_CASE("preprocessing flags are echoed") {
    const auto r = run("cluster --input " + data("iris.csv").string() +
                       " --k 3 --labels species --starts 5 --scale rms --shift-positive --shift-margin 0.5 --grid \"0,0.1..1\" "
                       "--step-type per-dimension");
    REQUIRE(r.code == 0);
    const json j = report_of(r);
    CHECK(j["preprocessing"]["scale_factors"].size() == 4);
    CHECK(j["preprocessing"]["shift_offsets"].size() == 4);
    CHECK(j["config"]["grid"].size() == 11);
    CHECK(j["config"]["step_type"] == "per-dimension");
}

TEST_CASE("report to file and csv format") {
    const auto out = scratch("report.json");
    REQUIRE(run("cluster --input " + data("iris.csv").string() + " --k 2 --labels species --starts 3 --output " + out.string()).code == 0);
    validate_report(json::parse(slurp(out)));

    const auto csv = run("cluster --input " + data("iris.csv").string() + " --k 2 --labels species --starts 3 --format csv");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("sepal_length,sepal_width,petal_length,petal_width,cluster\n", 0) == 0);
}

TEST_CASE("exit code 2 when the best start did not converge") {
    const auto r = run("cluster --input " + data("wine.csv").string() + " --k 3 --starts 2 --max-iter 1");
    CHECK(r.code == 2);
    const json j = report_of(r);
    CHECK_FALSE(j["model"]["converged"].get<bool>());
    CHECK(j["warnings"].size() >= 1);
}

TEST_CASE("usage and data errors exit 1") {
    CHECK(run("cluster --input " + data("iris.csv").string()).code == 1);
    CHECK(run("cluster --input " + data("iris.csv").string() + " --k 3 --lambda-mode weird").code == 1);
    CHECK(run("cluster --input /nonexistent.csv --k 2").code == 1);
    CHECK(run("frobnicate").code == 1);

    const auto tiny = scratch("tiny.csv");
    std::ofstream(tiny) << "a,b\n1,2\n3,4\n";
    const auto r = run("cluster --input " + tiny.string() + " --k 2");
    CHECK(r.code == 1);
    CHECK(stderr_text().find("more observations than clusters") != std::string::npos);

    const auto bad = scratch("bad.csv");
    std::ofstream(bad) << "a,b\n1,2\n3,abc\n4,5\n";
    CHECK(run("cluster --input " + bad.string() + " --k 2").code == 1);
    CHECK(stderr_text().find("abc") != std::string::npos);

    CHECK(run("cluster --input " + data("iris.csv").string() + " --k 2 --labels nope").code == 1);
    CHECK(run("cluster --input " + data("iris.csv").string() + " --k 2 --grid \"1,2\"").code == 1);
}

TEST_CASE("select-k on scaled wine") {
    const auto svg = scratch("jump.svg");
    const auto r = run("select-k --input " + data("wine.csv").string() + " --k-true-hint 3 --scale rms --svg " +
                       svg.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("kmax=7") != std::string::npos);
    CHECK(r.out.find("k,distortion\n") != std::string::npos);
    CHECK(r.out.find("eta,chosen_k\n") != std::string::npos);
    CHECK(r.out.find("selected K: 3\n") != std::string::npos);
    CHECK(slurp(svg).find("<svg") != std::string::npos);
}

TEST_CASE("select-k eta flags") {
    const auto r = run("select-k --input " + data("iris.csv").string() +
                       " --labels species --kmax 4 --starts 5 --shared-starts 5 --eta-min 0.5 --eta-max 4 --eta-count 8");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("eta_count=8") != std::string::npos);
    const auto e = run("select-k --input " + data("iris.csv").string() + " --labels species --kmax 3 --starts 3 --eta 1,2,3");
    REQUIRE(e.code == 0);
    CHECK(e.out.find("eta_count=3") != std::string::npos);
}

TEST_CASE("simulate") {
    const auto a = run("simulate --preset paper-toy --seed 1");
    const auto b = run("simulate --preset paper-toy --seed 1");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    std::set<std::string> labels;
    std::istringstream in(a.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "x1,x2,label");
    while (std::getline(in, line)) labels.insert(line.substr(line.rfind(',') + 1));
    CHECK(labels.size() == 2);

    CHECK(run("simulate --preset nope").code == 1);

    // Zero lambda keeps the latent Gaussian: sample skewness near 0.
    const auto g = run("simulate --n 10000 --means \"2,-1\" --sd 1 --lambda 0,0 --seed 3");
    REQUIRE(g.code == 0);
    std::istringstream gin(g.out);
    std::getline(gin, line);
    std::vector<double> col;
    while (std::getline(gin, line)) col.push_back(std::stod(line.substr(0, line.find(','))));
    REQUIRE(col.size() == 10000);
    double m = 0, m2 = 0, m3 = 0;
    for (double v : col) m += v;
    m /= static_cast<double>(col.size());
    for (double v : col) {
        m2 += (v - m) * (v - m);
        m3 += (v - m) * (v - m) * (v - m);
    }
    m2 /= static_cast<double>(col.size());
    m3 /= static_cast<double>(col.size());
    CHECK(std::fabs(m3 / std::pow(m2, 1.5)) < 0.1);
}

TEST_CASE("transform") {
    const auto one = scratch("one.csv");
    std::ofstream(one) << "v\n1.0\n";
    const auto r = run("transform --input " + one.string() + " --lambda 1");
    REQUIRE(r.code == 0);
    CHECK(std::stod(r.out.substr(r.out.find('\n') + 1)) == doctest::Approx(0.881374).epsilon(1e-6));

    const auto fwd = scratch("fwd.csv");
    REQUIRE(run("transform --input " + data("iris.csv").string() + " --labels species --lambda 0.5,1,2,4 --output " +
                fwd.string())
                .code == 0);
    const auto back = run("transform --input " + fwd.string() + " --labels species --lambda 0.5,1,2,4 --inverse");
    REQUIRE(back.code == 0);
    std::istringstream a(slurp(data("iris.csv"))), b(back.out);
    std::string la, lb;
    auto chomp = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };
    std::getline(a, la);
    std::getline(b, lb);
    chomp(la);
    CHECK(la == lb);
    double worst = 0;
    while (std::getline(a, la) && std::getline(b, lb)) {
        std::istringstream sa(la), sb(lb);
        std::string ca, cb;
        for (int j = 0; j < 4; ++j) {
            std::getline(sa, ca, ',');
            std::getline(sb, cb, ',');
            worst = std::max(worst, std::fabs(std::stod(ca) - std::stod(cb)));
        }
    }
    CHECK(worst <= 1e-10);

    const auto id = run("transform --input " + one.string() + " --lambda 0");
    CHECK(std::stod(id.out.substr(id.out.find('\n') + 1)) == 1.0);

    CHECK(run("transform --input " + data("iris.csv").string() + " --labels species --lambda 1,2").code == 1);
    CHECK(run("transform --input " + one.string()).code == 1);
}

TEST_CASE("transform from a per-cluster report") {
    const auto toy = scratch("toy2.csv");
    const auto rep = scratch("toy2.json");
    REQUIRE(run("simulate --preset paper-toy --seed 2 --output " + toy.string()).code == 0);
    REQUIRE(run("cluster --input " + toy.string() + " --k 2 --lambda-mode per-cluster --starts 5 --shared-starts 10 " +
                "--labels label --output " + rep.string())
                .code == 0);
    const auto r = run("transform --input " + toy.string() + " --labels label --from-report " + rep.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("x1,x2,label\n", 0) == 0);
}
