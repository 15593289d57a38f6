#include "delayrecon/config.hpp"
#include "delayrecon/experiment.hpp"
#include "delayrecon/io.hpp"
#include "delayrecon/normalize.hpp"
#include "support.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace delayrecon;
using namespace delayrecon::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "delayrecon_harness_tests" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

KeyValueConfig small_run(const std::string& extra = "") {
    return KeyValueConfig::parse(
        "preset = lorenz63\n"
        "sim.transient = 1000\n"
        "sim.pool = 3000\n"
        "sim.test = 300\n"
        "sample.n_train = 200\n"
        "cells = 4\n"
        "network.hidden = 8, 8\n"
        "train.steps = 20\n" +
        extra);
}

}  // namespace

TEST_CASE("affine normalization") {
    Matrix x(3, 2);
    x << -0.5, 0.25, 0.5, -0.25, 0.0, 0.1;
    const auto [y, t] = normalize::normalize(x, normalize::Mode::AffineLinf);
    CHECK(y.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    CHECK(t.center[0] == 0.0);
    CHECK(t.scale[0] == 0.5);
    const auto [z, t2] = normalize::normalize(y, normalize::Mode::AffineLinf);
    CHECK((z - y).norm() < 1e-15);
    CHECK(t2.scale[0] == doctest::Approx(1.0));

    const Matrix wide = Matrix::Random(40, 5) * 30.0 + Matrix::Constant(40, 5, 7.0);
    const auto [w, tw] = normalize::normalize(wide, normalize::Mode::AffineLinf);
    CHECK(w.cwiseAbs().maxCoeff() <= 1.0 + 1e-15);
    CHECK((tw.invert(w) - wide).cwiseAbs().maxCoeff() < 1e-12 * 40.0);
}

TEST_CASE("zscore normalization") {
    Matrix x = Matrix::Random(200, 3) * 5.0;
    x.col(1).array() += 100.0;
    const auto [y, t] = normalize::normalize(x, normalize::Mode::ZScore);
    for (Index j = 0; j < 3; ++j) {
        CHECK(std::abs(y.col(j).mean()) < 1e-10);
        CHECK(std::abs((y.col(j).array() - y.col(j).mean()).square().mean() - 1.0) < 1e-10);
    }
    CHECK((t.invert(y) - x).cwiseAbs().maxCoeff() < 1e-12 * 100.0);

    Matrix flat = x;
    flat.col(2).setConstant(4.0);
    testing::CaptureWarnings w;
    const auto [f, tf] = normalize::normalize(flat, normalize::Mode::ZScore);
    CHECK(f.col(2) == flat.col(2));
    CHECK(w.messages.size() == 1);

    CHECK_THROWS(normalize::normalize(Matrix(0, 2), normalize::Mode::ZScore));
    CHECK(normalize::parse_mode("zscore") == normalize::Mode::ZScore);
    CHECK_THROWS(normalize::parse_mode("minmax"));
}

TEST_CASE("key value configuration") {
    const auto kv = KeyValueConfig::parse("# comment\ntrain.lr = 1e-3  # trailing\n\n network.hidden = 4,5 \nflag = on\n");
    CHECK(kv.get_double("train.lr", 0.0) == 1e-3);
    CHECK(kv.get_list("network.hidden", {}) == std::vector<std::string>{"4", "5"});
    CHECK(kv.get_bool("flag", false));
    CHECK(kv.get_string("missing", "dflt") == "dflt");
    CHECK(kv.unused_keys().empty());

    CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("a = x").get_double("a", 0.0), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse("a = -3").get_count("a", 0), ConfigError);
}

TEST_CASE("presets carry the published settings") {
    const auto l = experiment_preset("lorenz63");
    CHECK(l.delay.tau_steps == 18);
    CHECK(l.delay.m == 4);
    CHECK(l.n_train == 2000);
    CHECK(l.cells == 20);
    CHECK(l.hidden == std::vector<std::size_t>{100, 100, 100, 100});
    CHECK(l.noise_variance == Vector::Constant(3, 0.1));
    CHECK(l.lr == 1e-3);
    CHECK(l.normalization == normalize::Mode::ZScore);

    const auto r = experiment_preset("rossler");
    CHECK(r.dt == 0.05);
    CHECK(r.delay.tau_steps == 29);
    const auto lv = experiment_preset("lotka_volterra");
    CHECK(lv.delay.tau_steps == 690);
    CHECK(lv.delay.m == 5);
    CHECK(lv.noise_variance == Vector::Constant(4, 5e-5));

    const auto sst = experiment_preset("sst");
    CHECK(sst.delay.tau_steps == 12);
    CHECK(sst.delay.m == 7);
    CHECK(sst.kernel.kind == metrics::KernelKind::Gaussian);
    CHECK(sst.kernel.sigma == 3.0);
    CHECK(sst.normalization == normalize::Mode::AffineLinf);
    CHECK(experiment_preset("era5").kernel.sigma == 25.0);

    const auto clean = experiment_preset("lorenz63_clean");
    CHECK(clean.cells == 100);
    CHECK(clean.pool_steps == 500000);
    CHECK(clean.epochs == 100);
    CHECK(clean.normalization == normalize::Mode::None);
    CHECK(clean.minibatch == 50);
    CHECK(clean.noise_variance.isZero(0.0));
    CHECK_THROWS_AS(experiment_preset("henon"), ConfigError);
}

TEST_CASE("configuration overrides and errors") {
    const auto cfg = experiment_from_config(KeyValueConfig::parse(
        "preset = rossler\ndelay.tau = 2.0\ntrain.kernel = gaussian\ntrain.sigma = 2\nnoise.variance = 0.2\nseed = 9\n"));
    CHECK(cfg.delay.tau_steps == 40);
    CHECK(cfg.kernel.sigma == 2.0);
    CHECK(cfg.noise_variance == Vector::Constant(3, 0.2));
    CHECK(cfg.seed == 9);

    const auto switched = experiment_from_config(KeyValueConfig::parse("system = lotka_volterra\n"));
    CHECK(switched.x0.size() == 4);

    CHECK_THROWS_AS(experiment_from_config(KeyValueConfig::parse("trian.lr = 1\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from_config(KeyValueConfig::parse("train.kernel = cubic\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from_config(KeyValueConfig::parse("train.lr = 0\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from_config(KeyValueConfig::parse("system = csv\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from_config(KeyValueConfig::parse("noise.variance = 0.1, 0.2\n")), ConfigError);
}

TEST_CASE("prepared data keeps training and test times apart") {
    const auto cfg = experiment_from_config(small_run());
    const auto data = prepare_data(cfg);
    CHECK(data.train_inputs.rows() == 200);
    CHECK(data.train_inputs.cols() == 4);
    CHECK(data.test_inputs.rows() == 300);
    CHECK(data.test_targets.cols() == 3);
    const std::set<std::size_t> train(data.train_time_indices.begin(), data.train_time_indices.end());
    CHECK(train.size() == 200);
    for (auto t : data.test_time_indices) CHECK(train.count(t) == 0);
    CHECK(*std::max_element(train.begin(), train.end()) < *std::min_element(data.test_time_indices.begin(), data.test_time_indices.end()));
    // The first delay coordinate of every training row is the noisy observable at the target time.
    for (Index i = 0; i < data.train_inputs.rows(); ++i) CHECK(data.train_inputs(i, 0) == data.train_targets(i, 0));
}

TEST_CASE("zero training steps leave both methods identical") {
    auto kv = small_run();
    kv.set("train.steps", "0");
    const auto report = run_experiment(experiment_from_config(kv));
    REQUIRE(report.metric("test_mse_pointwise"));
    CHECK(*report.metric("test_mse_pointwise") == *report.metric("test_mse_measure"));
    CHECK(report.loss_histories.size() == 2);
    CHECK(report.loss_histories[0].second.empty());
}

TEST_CASE("experiments are reproducible byte for byte") {
    const fs::path a = scratch("run_a"), b = scratch("run_b");
    auto kva = small_run();
    kva.set("out", a.string());
    auto kvb = small_run();
    kvb.set("out", b.string());
    const auto ra = run_experiment(experiment_from_config(kva));
    run_experiment(experiment_from_config(kvb));
    CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
    CHECK(slurp(a / "model_measure.dmat") == slurp(b / "model_measure.dmat"));
    CHECK(fs::exists(a / "init.dmat"));
    CHECK(fs::exists(a / "loss_pointwise.csv"));
    CHECK_FALSE(fs::exists(a / ".staging"));

    // Both methods started from the checkpointed initialization.
    CHECK(ra.init_digest.size() == 16);
    const auto saved = io::params_from_sections(io::load_dmat(a / "init.dmat"));
    CHECK(model::flatten(saved).size() > 0);

    // Different seed, different numbers.
    const fs::path c = scratch("run_c");
    auto kvc = small_run("seed = 5\n");
    kvc.set("out", c.string());
    run_experiment(experiment_from_config(kvc));
    CHECK(slurp(a / "report.csv") != slurp(c / "report.csv"));

    // Checkpoints reproduce the reported error.
    const auto rec = Reconstructor::from_sections(io::load_dmat(a / "model_pointwise.dmat"));
    const auto data = prepare_data(experiment_from_config(kva));
    CHECK(metrics::mse(rec.predict(data.test_inputs), data.test_targets) == *ra.metric("test_mse_pointwise"));
}

TEST_CASE("normalized runs store their transforms") {
    const fs::path dir = scratch("zscore");
    auto kv = small_run("normalize = zscore\n");
    kv.set("out", dir.string());
    const auto report = run_experiment(experiment_from_config(kv));
    const auto rec = Reconstructor::from_sections(io::load_dmat(dir / "model_measure.dmat"));
    CHECK(rec.input.mode == normalize::Mode::ZScore);
    const auto data = prepare_data(experiment_from_config(kv));
    CHECK(metrics::mse(rec.predict(data.test_inputs), data.test_targets) ==
          doctest::Approx(*report.metric("test_mse_measure")).epsilon(1e-14));
}

TEST_CASE("failed runs leave no artifacts behind") {
    const fs::path dir = scratch("failing");
    auto kv = small_run("train.lr = 1e300\n");
    kv.set("out", dir.string());
    CHECK_THROWS_AS(run_experiment(experiment_from_config(kv)), NumericError);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("tabular runs with a POD basis") {
    // A travelling wave sampled on 30 points; the observable is one grid point.
    const fs::path dir = scratch("tabular");
    fs::create_directories(dir);
    const fs::path csv = dir / "field.csv";
    {
        std::ofstream out(csv);
        for (int j = 0; j < 30; ++j) out << (j ? "," : "") << "p" << j;
        out << '\n';
        for (int t = 0; t < 400; ++t) {
            for (int j = 0; j < 30; ++j) {
                out << (j ? "," : "") << std::sin(0.2 * t - 0.3 * j) + 0.5 * std::cos(0.05 * t + 0.1 * j);
            }
            out << '\n';
        }
    }
    auto kv = KeyValueConfig::parse("preset = sst\ndata.path = " + csv.string() +
                                    "\ndata.observable = p3\ndata.train_rows = 300\npod.modes = 4\n"
                                    "network.hidden = 8\ntrain.steps = 30\ndelay.tau_steps = 3\ndelay.m = 3\n");
    kv.set("out", (dir / "out").string());
    const auto report = run_experiment(experiment_from_config(kv));
    CHECK(report.metric("test_field_mse_measure"));
    CHECK(fs::exists(dir / "out" / "pod_basis.dmat"));
    const auto data = prepare_data(experiment_from_config(kv));
    CHECK(data.basis->modes.cols() == 4);
    CHECK(data.train_targets.cols() == 4);
    for (auto t : data.train_time_indices) CHECK(t < 300);
    for (auto t : data.test_time_indices) CHECK(t >= 300);
}

TEST_CASE("report emission") {
    Report r;
    r.seed = 3;
    r.metrics = {{"alpha", 0.1234567891}, {"beta", 2.0}};
    r.loss_histories = {{"pointwise", {3.0, 2.0, 1.0}}};
    const fs::path dir = scratch("report");
    const auto csv = emit_report(r, ReportFormat::Csv, dir);
    const auto txt = emit_report(r, ReportFormat::Text, dir);

    const std::string text = slurp(csv);
    CHECK(text == "metric,value\nalpha,0.1234567891\nbeta,2\n");
    std::ifstream loss(dir / "loss_pointwise.csv");
    std::string line;
    int lines = 0;
    while (std::getline(loss, line)) ++lines;
    CHECK(lines == 4);

    // Text and CSV agree at six significant digits.
    const std::string table = slurp(txt);
    for (const auto& [key, value] : read_report_csv(csv).metrics) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", value);
        CHECK(table.find(key) != std::string::npos);
        CHECK(table.find(buf) != std::string::npos);
    }
    CHECK(read_report_csv(csv).metrics == r.metrics);
    CHECK(parse_report_format("text") == ReportFormat::Text);
}

TEST_CASE("variance trace") {
    Matrix x(2, 2);
    x << 1, 0, -1, 0;
    CHECK(variance_trace(x) == 1.0);
}
