#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>

#include "pvc/common.hpp"
#include "pvc/mlp.hpp"

using namespace pvc;

namespace {

MlpWeights manual_net(std::vector<int> dims, OutputKind kind) {
    MlpWeights w;
    w.layer_dims = std::move(dims);
    w.output_kind = kind;
    for (size_t l = 0; l + 1 < w.layer_dims.size(); ++l) {
        w.weights.emplace_back(static_cast<size_t>(w.layer_dims[l]) * w.layer_dims[l + 1], 0.0);
        w.biases.emplace_back(w.layer_dims[l + 1], 0.0);
    }
    w.in_mean.assign(static_cast<size_t>(w.layer_dims.front()), 0.0);
    w.in_scale.assign(static_cast<size_t>(w.layer_dims.front()), 1.0);
    w.out_mean.assign(static_cast<size_t>(w.layer_dims.back()), 0.0);
    w.out_scale.assign(static_cast<size_t>(w.layer_dims.back()), 1.0);
    return w;
}

}  // namespace

TEST_CASE("identity linear layer maps x to x", "[mlp]") {
    auto w = manual_net({3, 3}, OutputKind::Linear);
    w.weights[0] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::vector<double> x{0.25, -1.5, 3.0};
    REQUIRE(mlp_forward(w, x) == x);
}

TEST_CASE("equal logits softmax to one half each", "[mlp]") {
    auto w = manual_net({2, 2}, OutputKind::Softmax);
    auto y = mlp_forward(w, {0.7, -0.2});  // zero weights: both logits 0
    REQUIRE(y[0] == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(y[1] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("fixed 2x2x2 network matches the hand-computed oracle", "[mlp]") {
    auto w = manual_net({2, 2, 2}, OutputKind::Linear);
    w.weights[0] = {0.5, -0.25, 0.75, 0.1};
    w.biases[0] = {0.1, -0.2};
    w.weights[1] = {1.0, -1.0, 0.5, 2.0};
    w.biases[1] = {0.05, -0.05};
    std::vector<double> x{0.3, 0.6};

    // Oracle arithmetic, done independently of the implementation.
    double h1 = 1.0 / (1.0 + std::exp(-(0.5 * 0.3 + -0.25 * 0.6 + 0.1)));
    double h2 = 1.0 / (1.0 + std::exp(-(0.75 * 0.3 + 0.1 * 0.6 + -0.2)));
    double y1 = 1.0 * h1 + -1.0 * h2 + 0.05;
    double y2 = 0.5 * h1 + 2.0 * h2 + -0.05;

    auto y = mlp_forward(w, x);
    REQUIRE(y[0] == Catch::Approx(y1).margin(1e-9));
    REQUIRE(y[1] == Catch::Approx(y2).margin(1e-9));
}

TEST_CASE("dimension mismatch raises DimensionError", "[mlp]") {
    auto w = manual_net({3, 2}, OutputKind::Linear);
    REQUIRE_THROWS_AS(mlp_forward(w, {1.0, 2.0}), DimensionError);
}

TEST_CASE("softmax outputs sum to one for random networks", "[mlp]") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        int in = 1 + static_cast<int>(rng.uniform_int(6));
        int hidden = 1 + static_cast<int>(rng.uniform_int(8));
        int out = 2 + static_cast<int>(rng.uniform_int(5));
        auto w = init_mlp({in, hidden, out}, OutputKind::Softmax, rng);
        std::vector<double> x(static_cast<size_t>(in));
        for (auto& v : x) v = rng.uniform(-3.0, 3.0);
        auto y = mlp_forward(w, x);
        double sum = 0.0;
        for (double v : y) sum += v;
        REQUIRE(sum == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("analytic gradients match central differences", "[mlp]") {
    Rng rng(23);
    for (int trial = 0; trial < 8; ++trial) {
        OutputKind kind = trial % 2 ? OutputKind::Linear : OutputKind::Softmax;
        int in = 2 + static_cast<int>(rng.uniform_int(3));
        int hid = 2 + static_cast<int>(rng.uniform_int(4));
        int out = 2 + static_cast<int>(rng.uniform_int(3));
        auto w = init_mlp({in, hid, out}, kind, rng);
        Sample s;
        s.first.resize(static_cast<size_t>(in));
        for (auto& v : s.first) v = rng.uniform(-1.0, 1.0);
        s.second.assign(static_cast<size_t>(out), 0.0);
        if (kind == OutputKind::Softmax)
            s.second[rng.uniform_int(static_cast<uint64_t>(out))] = 1.0;
        else
            for (auto& v : s.second) v = rng.uniform(-1.0, 1.0);

        auto [analytic, numeric] = mlp_gradients(w, s);
        REQUIRE(analytic.size() == numeric.size());
        for (size_t i = 0; i < analytic.size(); ++i) {
            double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), 1e-6});
            REQUIRE(std::fabs(analytic[i] - numeric[i]) / denom < 1e-4);
        }
    }
}

TEST_CASE("xor trains to 100 percent within 2000 epochs", "[mlp]") {
    std::vector<Sample> data;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            std::vector<double> x{static_cast<double>(a), static_cast<double>(b)};
            int label = a ^ b;
            data.emplace_back(x, label ? std::vector<double>{1.0, 0.0}
                                       : std::vector<double>{0.0, 1.0});
        }
    TrainConfig cfg;
    cfg.layer_dims = {2, 8, 2};
    cfg.output_kind = OutputKind::Softmax;
    cfg.learning_rate = 1.0;
    cfg.batch_size = 4;
    cfg.max_epochs = 2000;
    cfg.patience = 2000;  // run to convergence
    cfg.cv_fraction = 0.0;
    cfg.seed = 5;
    cfg.normalize_input = false;
    auto w = train_mlp(data, cfg);
    for (const auto& s : data) {
        auto y = mlp_forward(w, s.first);
        REQUIRE((y[0] > 0.5) == (s.second[0] > 0.5));
    }
}

TEST_CASE("constant-target regression reaches near-zero mse", "[mlp]") {
    std::vector<Sample> data;
    Rng rng(31);
    for (int i = 0; i < 32; ++i)
        data.emplace_back(std::vector<double>{rng.uniform(-1.0, 1.0)},
                          std::vector<double>{0.75});
    TrainConfig cfg;
    cfg.layer_dims = {1, 4, 1};
    cfg.output_kind = OutputKind::Linear;
    cfg.learning_rate = 0.5;
    cfg.max_epochs = 500;
    cfg.patience = 500;
    cfg.cv_fraction = 0.0;
    cfg.seed = 3;
    auto w = train_mlp(data, cfg);
    double mse = 0.0;
    for (const auto& s : data) {
        double d = mlp_forward(w, s.first)[0] - 0.75;
        mse += d * d;
    }
    mse /= static_cast<double>(data.size());
    REQUIRE(mse < 1e-4);
}

TEST_CASE("same seed trains to bit-identical weights", "[mlp]") {
    std::vector<Sample> data;
    Rng rng(8);
    for (int i = 0; i < 24; ++i) {
        std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        data.emplace_back(x, x[0] + x[1] > 0 ? std::vector<double>{1.0, 0.0}
                                             : std::vector<double>{0.0, 1.0});
    }
    TrainConfig cfg;
    cfg.layer_dims = {2, 6, 2};
    cfg.output_kind = OutputKind::Softmax;
    cfg.max_epochs = 30;
    cfg.seed = 77;
    auto a = train_mlp(data, cfg);
    auto b = train_mlp(data, cfg);
    REQUIRE(serialize_weights(a) == serialize_weights(b));
}

TEST_CASE("cv loss log is non-increasing and training stops early", "[mlp]") {
    std::vector<Sample> data;
    Rng rng(15);
    for (int i = 0; i < 64; ++i) {
        std::vector<double> x{rng.uniform(-1.0, 1.0)};
        data.emplace_back(x, std::vector<double>{2.0 * x[0]});
    }
    TrainConfig cfg;
    cfg.layer_dims = {1, 3, 1};
    cfg.output_kind = OutputKind::Linear;
    cfg.max_epochs = 400;
    cfg.patience = 3;
    cfg.seed = 9;
    TrainLog log;
    train_mlp(data, cfg, &log);
    REQUIRE(log.epochs_run >= 1);
    for (size_t e = 1; e < log.cv_loss_per_epoch.size(); ++e)
        REQUIRE(log.cv_loss_per_epoch[e] <= log.cv_loss_per_epoch[e - 1] + 1e-15);
}

TEST_CASE("weight container roundtrips through disk with json sidecar", "[mlp]") {
    Rng rng(42);
    auto w = init_mlp({5, 7, 3}, OutputKind::Linear, rng);
    for (auto& v : w.out_mean) v = rng.uniform(-1.0, 1.0);
    std::string path = "test_mlp_tmp.pvcw";
    save_weights(path, w, {{"role", "test"}});
    auto back = load_weights(path);
    REQUIRE(back.layer_dims == w.layer_dims);
    REQUIRE(back.output_kind == w.output_kind);
    // Values roundtrip through float32 storage.
    for (size_t l = 0; l < w.weights.size(); ++l)
        for (size_t i = 0; i < w.weights[l].size(); ++i)
            REQUIRE(back.weights[l][i] == Catch::Approx(w.weights[l][i]).margin(1e-6));
    std::ifstream sidecar(path + ".json");
    REQUIRE(sidecar.good());
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("corrupt weight bytes are rejected", "[mlp]") {
    Rng rng(1);
    auto bytes = serialize_weights(init_mlp({2, 2}, OutputKind::Linear, rng));
    auto truncated = bytes;
    truncated.resize(bytes.size() / 2);
    REQUIRE_THROWS_AS(deserialize_weights(truncated), CorruptStream);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    REQUIRE_THROWS_AS(deserialize_weights(bad_magic), CorruptStream);
}

TEST_CASE("parameter count matches the paper architecture", "[mlp]") {
    REQUIRE(count_parameters({351, 1024, 1024, 1024, 2}) == 2461698u);
    REQUIRE(count_parameters({2, 2}) == 6u);
    REQUIRE(count_parameters({132, 1024, 1024, 1024, 1024, 84}) == 3371092u);
}

TEST_CASE("parameter count is additive over layer splits", "[mlp]") {
    // Splitting [a,b,c] at b: count([a,b]) + count([b,c]) == count([a,b,c]).
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        int a = 1 + static_cast<int>(rng.uniform_int(64));
        int b = 1 + static_cast<int>(rng.uniform_int(64));
        int c = 1 + static_cast<int>(rng.uniform_int(64));
        REQUIRE(count_parameters({a, b, c}) ==
                count_parameters({a, b}) + count_parameters({b, c}));
    }
}
