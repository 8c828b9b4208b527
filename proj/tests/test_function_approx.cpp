#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "spcl/checks.hpp"
#include "spcl/consistency.hpp"
#include "spcl/function_approx.hpp"
#include "spcl/rng.hpp"

using namespace spcl;

namespace {

Model tabular_sparse(int n_states, int n_actions, double alpha) {
    ModelSpec spec;
    spec.trunk = TrunkKind::Tabular;
    return Model(spec, n_states, n_actions, alpha);
}

}  // namespace

TEST_CASE("forward head constructions") {
    Model m = tabular_sparse(1, 3, 0.8);
    auto theta = m.params().slice("theta");

    // a dominant score collapses mu to one-hot and puts positive lambda off-support
    theta[0] = 2.0;
    theta[1] = 0.3;
    theta[2] = 0.1;
    const ModelOutputs o1 = m.forward(std::vector<double>{0.0}).out;
    CHECK(o1.mu.probs == std::vector<double>{1.0, 0.0, 0.0});
    CHECK(o1.lambda[0] == 0.0);
    CHECK(o1.lambda[1] > 0.0);
    CHECK(o1.lambda[2] > 0.0);
    CHECK(o1.Lambda >= -0.4);
    CHECK(o1.Lambda <= 0.0);

    // equal scores give the uniform policy with all multipliers zero
    theta[0] = theta[1] = theta[2] = 0.7;
    const ModelOutputs o2 = m.forward(std::vector<double>{0.0}).out;
    for (double p : o2.mu.probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    for (double l : o2.lambda) CHECK(l == 0.0);
}

TEST_CASE("structural constraints hold for any parameters") {
    Rng rng(71);
    ModelSpec specs[3];
    specs[0].trunk = TrunkKind::Tabular;
    specs[1].trunk = TrunkKind::Linear;
    specs[2].trunk = TrunkKind::Mlp;
    specs[2].hidden = {6};
    specs[1].unified = true;
    long draws_per_spec = 34000;
    for (const ModelSpec& spec : specs) {
        const double alpha = 0.6;
        Model m(spec, spec.trunk == TrunkKind::Tabular ? 4 : 3, 5, alpha);
        for (long t = 0; t < draws_per_spec / 100; ++t) {
            for (double& p : m.params().data) p = uniform_in(rng, -2.0, 2.0);
            for (int rep = 0; rep < 100; ++rep) {
                std::vector<double> in(m.expected_input_size());
                if (spec.trunk == TrunkKind::Tabular) in[0] = uniform_int(rng, 0, 3);
                else
                    for (double& x : in) x = uniform_in(rng, -1.5, 1.5);
                const ModelOutputs o = m.forward(in).out;
                double mass = 0.0;
                for (int a = 0; a < 5; ++a) {
                    mass += o.mu.probs[a];
                    CHECK(o.lambda[a] * o.mu.probs[a] == 0.0);
                    CHECK(o.lambda[a] >= 0.0);
                }
                CHECK(std::abs(mass - 1.0) <= 1e-10);
                CHECK(o.Lambda >= -0.5 * alpha);
                CHECK(o.Lambda <= 0.0);
            }
        }
    }
}

TEST_CASE("parameter slicing and documented tabular counts") {
    const int n = 7, A = 4;
    Model sep = tabular_sparse(n, A, 0.5);
    CHECK(sep.params().slice("theta").size() == static_cast<std::size_t>(n * A));
    CHECK(sep.params().slice("phi").size() == static_cast<std::size_t>(n));
    CHECK(sep.params().slice("rho").size() == static_cast<std::size_t>(n * (A + 1)));
    CHECK(sep.params().data.size() == static_cast<std::size_t>(n * (2 * A + 2)));

    ModelSpec uspec;
    uspec.trunk = TrunkKind::Tabular;
    uspec.unified = true;
    Model uni(uspec, n, A, 0.5);
    CHECK(uni.params().slice("psi").size() == static_cast<std::size_t>(n * A));
    CHECK(uni.params().slice("rho").size() == static_cast<std::size_t>(n * (A + 1)));

    ModelSpec sspec;
    sspec.trunk = TrunkKind::Tabular;
    sspec.policy = PolicyHead::Softmax;
    Model soft(sspec, n, A, 0.5);
    CHECK(soft.params().data.size() == static_cast<std::size_t>(n * A + n));
    CHECK_THROWS_AS(soft.params().slice("rho"), std::invalid_argument);
}

TEST_CASE("mlp head shapes") {
    ModelSpec spec;
    spec.trunk = TrunkKind::Mlp;
    spec.hidden = {64, 64};
    Model m(spec, 9, 6, 0.5);
    Rng rng(73);
    m.init_params(rng);
    const ModelOutputs o = m.forward(std::vector<double>(9, 0.2)).out;
    CHECK(o.mu.probs.size() == 6);
    CHECK(o.lambda.size() == 6);
    CHECK(o.raw_scores.size() == 6);
    CHECK(std::isfinite(o.v));
    CHECK(std::isfinite(o.Lambda));
}

TEST_CASE("unified model matches the closed forms of its own Q") {
    Rng rng(79);
    ModelSpec spec;
    spec.trunk = TrunkKind::Tabular;
    spec.unified = true;
    const double alpha = 0.7;
    Model m(spec, 5, 4, alpha);
    for (double& p : m.params().data) p = uniform_in(rng, -2.0, 2.0);
    for (int x = 0; x < 5; ++x) {
        const ModelOutputs o = m.forward(std::vector<double>{static_cast<double>(x)}).out;
        const ActionScores& q = o.raw_scores;
        ActionScores z(q.size());
        for (std::size_t a = 0; a < q.size(); ++a) z[a] = q[a] / alpha;
        CHECK(std::abs(o.v - alpha * spmax(z)) <= 1e-10);
        const PolicyDistribution mu = sparsemax_policy(q, alpha);
        for (std::size_t a = 0; a < q.size(); ++a) CHECK(std::abs(o.mu.probs[a] - mu.probs[a]) <= 1e-10);
        // variational identity at the model's own Q
        double dot = 0.0;
        for (std::size_t a = 0; a < q.size(); ++a) dot += o.mu.probs[a] * q[a];
        CHECK(std::abs(o.v - dot - alpha * tsallis_entropy(o.mu)) <= 1e-10);
    }
}

TEST_CASE("per-head gradients agree with finite differences") {
    Rng rng(83);
    for (int which = 0; which < 7; ++which) {
        const int A = 4;
        const double alpha = 0.9;
        Model model = checks::detail::make_random_model(rng, which, 5, A, alpha);
        std::vector<SubTrajectory> probe = checks::detail::make_random_batch(rng, model, 1, 1);
        bool clear = false;
        for (int attempt = 0; attempt < 50 && !clear; ++attempt) {
            for (double& p : model.params().data) p = uniform_in(rng, -1.0, 1.0);
            probe = checks::detail::make_random_batch(rng, model, 1, 1);
            clear = !checks::detail::near_kink(model, probe, 1e-3);
        }
        REQUIRE(clear);
        const ModelInput& input = probe[0].states[0];
        const bool soft = model.spec().policy == PolicyHead::Softmax;

        struct Probe {
            const char* name;
            std::function<double(const ModelOutputs&)> value;
            std::function<OutputGrads(int)> upstream;
        };
        std::vector<Probe> probes;
        probes.push_back({"v", [](const ModelOutputs& o) { return o.v; },
                          [&](int) {
                              OutputGrads g;
                              g.dv = 1.0;
                              return g;
                          }});
        probes.push_back({"mu", [](const ModelOutputs& o) { return o.mu.probs[1]; },
                          [&](int) {
                              OutputGrads g;
                              g.dmu.assign(A, 0.0);
                              g.dmu[1] = 1.0;
                              return g;
                          }});
        if (!soft) {
            probes.push_back({"lambda", [](const ModelOutputs& o) { return o.lambda[2]; },
                              [&](int) {
                                  OutputGrads g;
                                  g.dlambda.assign(A, 0.0);
                                  g.dlambda[2] = 1.0;
                                  return g;
                              }});
            probes.push_back({"Lambda", [](const ModelOutputs& o) { return o.Lambda; },
                              [&](int) {
                                  OutputGrads g;
                                  g.dLambda = 1.0;
                                  return g;
                              }});
        }
        for (const auto& p : probes) {
            const Model::Cache cache = model.forward(input);
            ParamVector grad = model.params().zeros_like();
            model.backward(cache, p.upstream(0), grad);
            const std::vector<double> fd = finite_difference_gradient(
                [&]() { return p.value(model.forward(input).out); }, model.params().data);
            for (std::size_t i = 0; i < fd.size(); ++i) {
                const double denom = std::max({1.0, std::abs(fd[i]), std::abs(grad.data[i])});
                CHECK(std::abs(fd[i] - grad.data[i]) / denom <= 1e-5);
            }
        }
    }
}

TEST_CASE("relu kink takes the zero-side subgradient") {
    Model m = tabular_sparse(1, 2, 0.5);
    auto theta = m.params().slice("theta");
    theta[0] = 1.0;
    theta[1] = 0.0;  // support {0}, G = 0, so G - f_1 = 0 exactly: the kink
    const Model::Cache c = m.forward(std::vector<double>{0.0});
    CHECK(c.out.lambda[1] == 0.0);
    OutputGrads up;
    up.dlambda.assign(2, 0.0);
    up.dlambda[1] = 1.0;
    ParamVector grad = m.params().zeros_like();
    m.backward(c, up, grad);
    for (double g : grad.data) CHECK(g == 0.0);
}

TEST_CASE("projection preserves normalization: d(sum mu)/df = 0") {
    Rng rng(89);
    Model m = tabular_sparse(1, 5, 0.5);
    for (double& p : m.params().data) p = uniform_in(rng, -1.0, 1.0);
    const Model::Cache c = m.forward(std::vector<double>{0.0});
    OutputGrads up;
    up.dmu.assign(5, 1.0);  // upstream gradient of sum_a mu_a
    ParamVector grad = m.params().zeros_like();
    m.backward(c, up, grad);
    for (double g : grad.slice("theta")) CHECK(std::abs(g) <= 1e-15);
}

TEST_CASE("loaded witness is reproduced exactly by the tabular heads") {
    Rng rng(97);
    const TabularMDP mdp = random_mdp(rng, 6, 4, 0.9);
    const double alpha = 0.4;
    const ValueFunction v = value_iteration(mdp, BackupKind::Sparse, alpha, 1e-12).v;
    const TabularPolicy mu = extract_policy(mdp, v, BackupKind::Sparse, alpha);
    const ConsistencyWitness w = construct_witness(mdp, v, mu, alpha);

    Model model = tabular_sparse(6, 4, alpha);
    load_tabular_witness(model, w.v, w.mu, w.lambda, w.Lambda);
    for (int x = 0; x < 6; ++x) {
        const ModelOutputs o = model.forward(std::vector<double>{static_cast<double>(x)}).out;
        CHECK(std::abs(o.v - w.v[x]) <= 1e-14);
        CHECK(std::abs(o.Lambda - w.Lambda[x]) <= 1e-12);
        for (int a = 0; a < 4; ++a) {
            CHECK(std::abs(o.mu.probs[a] - w.mu.dist[x].probs[a]) <= 1e-12);
            CHECK(std::abs(o.lambda[a] - w.lam(x, a, 4)) <= 1e-12);
        }
    }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    Rng rng(101);
    ModelSpec spec;
    spec.trunk = TrunkKind::Mlp;
    spec.hidden = {5, 3};
    spec.unified = true;
    Model m(spec, 4, 3, 0.8);
    m.init_params(rng);
    const auto dir = std::filesystem::temp_directory_path() / "spcl_ckpt_test";
    std::filesystem::create_directories(dir);
    const std::string p1 = (dir / "a.bin").string(), p2 = (dir / "b.bin").string();
    save_checkpoint(m, p1);
    Model loaded = load_checkpoint(p1);
    CHECK(loaded.params().data == m.params().data);
    CHECK(loaded.n_actions() == 3);
    CHECK(loaded.alpha() == 0.8);
    CHECK(loaded.spec().unified);
    save_checkpoint(loaded, p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("window encoder layout") {
    WindowEncoder enc;
    enc.n_symbols = 3;
    enc.n_actions = 2;
    enc.window = 2;
    const std::vector<int> obs = {1, 2, 0};
    const std::vector<int> acts = {1, 0};
    // dim = 2*3 + 1*2 = 8
    CHECK(enc.input_dim() == 8);
    const std::vector<double> at0 = enc.encode(obs, acts, 0);
    CHECK(at0 == std::vector<double>{0, 1, 0, 0, 0, 0, 0, 0});
    const std::vector<double> at1 = enc.encode(obs, acts, 1);
    CHECK(at1 == std::vector<double>{0, 0, 1, 0, 1, 0, 0, 1});
    const std::vector<double> at2 = enc.encode(obs, acts, 2);
    CHECK(at2 == std::vector<double>{1, 0, 0, 0, 0, 1, 1, 0});

    WindowEncoder tab;
    tab.n_symbols = 5;
    tab.n_actions = 2;
    tab.window = 1;
    tab.tabular = true;
    CHECK(tab.encode(obs, acts, 2) == std::vector<double>{0.0});
    tab.window = 3;
    CHECK_THROWS_AS(tab.encode(obs, acts, 0), std::invalid_argument);
}

TEST_CASE("finite_difference_gradient on a quadratic") {
    std::vector<double> p = {1.0, -2.0, 0.5};
    const auto fd = finite_difference_gradient(
        [&]() { return 1.0 * p[0] * p[0] + 2.0 * p[1] * p[1] + 3.0 * p[2] * p[2]; }, p);
    CHECK(fd[0] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(fd[1] == doctest::Approx(-8.0).epsilon(1e-7));
    CHECK(fd[2] == doctest::Approx(3.0).epsilon(1e-7));
}
