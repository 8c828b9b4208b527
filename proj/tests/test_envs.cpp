#include <doctest.h>

#include <sstream>

#include "spcl/envs.hpp"
#include "spcl/rng.hpp"

using namespace spcl;

namespace {

// integer value of little-endian base-V digits
long digits_value(const std::vector<int>& digits, int base) {
    long v = 0, mult = 1;
    for (int d : digits) {
        v += d * mult;
        mult *= base;
    }
    return v;
}

}  // namespace

TEST_CASE("action encoding is a bijection") {
    for (int vocab : {2, 5, 13}) {
        for (int moves : {2, 4}) {
            const int n = moves * (1 + vocab);
            for (int a = 0; a < n; ++a) {
                const TapeAction t = decode_action(a, vocab);
                CHECK(encode_action(t, vocab) == a);
                CHECK(t.move >= 0);
                CHECK(t.move < moves);
                if (t.write) {
                    CHECK(t.ch >= 0);
                    CHECK(t.ch < vocab);
                } else {
                    CHECK(t.ch == -1);
                }
            }
        }
    }
}

TEST_CASE("task targets derive from the tape") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        TapeEnv copy = make_task(TaskKind::Copy, 5, 1, 6, seed);
        CHECK(copy.expected_output() == copy.grid()[0]);

        TapeEnv rev = make_task(TaskKind::Reverse, 5, 1, 6, seed);
        std::vector<int> r(rev.grid()[0].rbegin(), rev.grid()[0].rend());
        CHECK(rev.expected_output() == r);

        TapeEnv dup = make_task(TaskKind::DuplicatedInput, 5, 1, 6, seed);
        const std::vector<int>& tape = dup.grid()[0];
        const std::vector<int>& base = dup.expected_output();
        REQUIRE(tape.size() == 2 * base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(tape[2 * i] == base[i]);
            CHECK(tape[2 * i + 1] == base[i]);
        }

        TapeEnv rep = make_task(TaskKind::RepeatCopy, 5, 1, 6, seed);
        const std::vector<int>& s = rep.grid()[0];
        std::vector<int> want = s;
        want.insert(want.end(), s.rbegin(), s.rend());
        want.insert(want.end(), s.begin(), s.end());
        CHECK(rep.expected_output() == want);

        // base-V addition, least significant digit first
        TapeEnv add = make_task(TaskKind::ReversedAddition, 3, 1, 5, seed);
        const long total = digits_value(add.grid()[0], 3) + digits_value(add.grid()[1], 3);
        CHECK(digits_value(add.expected_output(), 3) == total);
    }
}

TEST_CASE("step semantics") {
    TapeEnv env = make_task(TaskKind::Copy, 4, 3, 3, 9);
    const std::vector<int>& tape = env.grid()[0];

    // writing the correct character pays 1; a wrong one ends the episode
    const int right_write = encode_action({1, true, tape[0]}, 4);
    StepResult r = env.step(right_write);
    CHECK(r.reward == 1.0);
    CHECK_FALSE(r.done);

    const int wrong = encode_action({1, true, (tape[1] + 1) % 4}, 4);
    r = env.step(wrong);
    CHECK(r.reward == 0.0);
    CHECK(r.done);
    CHECK_FALSE(r.truncated);
    CHECK_THROWS_AS(env.step(0), std::logic_error);

    // move-only actions forever hit the step cap as a truncation
    TapeEnv idle = make_task(TaskKind::Copy, 4, 3, 3, 9);
    const int move_only = encode_action({1, false, -1}, 4);
    StepResult last{};
    for (int t = 0; t < idle.step_cap(); ++t) last = idle.step(move_only);
    CHECK(last.done);
    CHECK(last.truncated);

    // walking off the right edge observes the blank symbol
    TapeEnv walker = make_task(TaskKind::Copy, 4, 2, 2, 5);
    StepResult w{};
    for (int i = 0; i < 2; ++i) w = walker.step(move_only);
    CHECK(w.obs == walker.blank());
}

TEST_CASE("scripted oracle earns the full reward on every task") {
    for (TaskKind kind : {TaskKind::Copy, TaskKind::DuplicatedInput, TaskKind::RepeatCopy, TaskKind::Reverse,
                          TaskKind::ReversedAddition}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            TapeEnv env = make_task(kind, kind == TaskKind::ReversedAddition ? 3 : 5, 1, 5, seed);
            double total = 0.0;
            StepResult last{};
            for (int a : env.oracle_actions()) {
                last = env.step(a);
                total += last.reward;
                if (last.done) break;
            }
            CHECK(total == doctest::Approx(static_cast<double>(env.target_length())));
            CHECK(last.done);
            CHECK_FALSE(last.truncated);
        }
    }
}

TEST_CASE("episodes are deterministic given seed and actions") {
    for (TaskKind kind : {TaskKind::Copy, TaskKind::ReversedAddition}) {
        TapeEnv a(kind, 4, 2, 6);
        TapeEnv b(kind, 4, 2, 6);
        Rng rng(77);
        const int obs_a = a.reset(123), obs_b = b.reset(123);
        CHECK(obs_a == obs_b);
        for (int t = 0; t < 30; ++t) {
            const int action = uniform_int(rng, 0, a.n_actions() - 1);
            const StepResult ra = a.step(action);
            const StepResult rb = b.step(action);
            CHECK(ra.obs == rb.obs);
            CHECK(ra.reward == rb.reward);
            CHECK(ra.done == rb.done);
            CHECK(ra.truncated == rb.truncated);
            if (ra.done) break;
        }
    }
}

TEST_CASE("wrap_tabular") {
    // deterministic chain follows the analytic path
    TabularMDP chain = TabularMDP::zeros(3, 1, 0.9);
    chain.r(0, 0) = 1.0;
    chain.p(0, 0, 1) = 1.0;
    chain.p(1, 0, 2) = 1.0;
    chain.p(2, 0, 2) = 1.0;
    TabularMDPEnv env = wrap_tabular(chain, 4, 0);
    CHECK(env.reset(1) == 0);
    StepResult r = env.step(0);
    CHECK(r.obs == 1);
    CHECK(r.reward == 1.0);
    r = env.step(0);
    CHECK(r.obs == 2);
    r = env.step(0);
    CHECK(r.obs == 2);
    r = env.step(0);
    CHECK(r.done);
    CHECK(r.truncated);  // horizon cut, not a terminal state

    // bandit episodes always run to the horizon
    TabularMDP bandit = TabularMDP::zeros(1, 2, 0.9);
    bandit.r(0, 0) = 1.0;
    bandit.p(0, 0, 0) = 1.0;
    bandit.p(0, 1, 0) = 1.0;
    TabularMDPEnv benv = wrap_tabular(bandit, 6, 0);
    benv.reset(3);
    int len = 0;
    while (true) {
        const StepResult s = benv.step(len % 2);
        ++len;
        if (s.done) break;
    }
    CHECK(len == 6);

    // terminal states end episodes without truncation
    TabularMDP term = TabularMDP::zeros(2, 1, 0.9);
    term.p(0, 0, 1) = 1.0;
    term.r(0, 0) = 0.5;
    term.p(1, 0, 1) = 1.0;
    term.make_terminal(1);
    TabularMDPEnv tenv = wrap_tabular(term, 10, 0);
    tenv.reset(5);
    const StepResult ts = tenv.step(0);
    CHECK(ts.done);
    CHECK_FALSE(ts.truncated);

    // empirical transition frequencies match P within 3-sigma binomial bounds
    Rng rng(99);
    TabularMDP m = random_mdp(rng, 3, 2, 0.9);
    TabularMDPEnv fenv = wrap_tabular(m, 1000000, 0);
    fenv.reset(42);
    int state = 0;
    std::vector<long> counts(3 * 2 * 3, 0);
    std::vector<long> visits(3 * 2, 0);
    const long steps = 30000;
    Rng arng(5);
    for (long t = 0; t < steps; ++t) {
        const int a = uniform_int(arng, 0, 1);
        const StepResult s = fenv.step(a);
        ++counts[(state * 2 + a) * 3 + s.obs];
        ++visits[state * 2 + a];
        state = s.obs;
    }
    for (int x = 0; x < 3; ++x)
        for (int a = 0; a < 2; ++a) {
            const long n = visits[x * 2 + a];
            if (n < 200) continue;
            for (int y = 0; y < 3; ++y) {
                const double p = m.p(x, a, y);
                const double freq = static_cast<double>(counts[(x * 2 + a) * 3 + y]) / n;
                const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
                CHECK(std::abs(freq - p) <= 3.0 * sigma + 1e-9);
            }
        }
}

TEST_CASE("trajectory dump round-trip") {
    TrajectoryDump d;
    d.task = "copy";
    d.vocab = 5;
    d.seed = 987654321;
    d.rows = {{0, 2, 7, 1.0, 0}, {1, 4, 3, 0.0, 1}};
    std::stringstream ss;
    write_trajectory(ss, d);
    const TrajectoryDump back = read_trajectory(ss);
    CHECK(back.task == d.task);
    CHECK(back.vocab == d.vocab);
    CHECK(back.seed == d.seed);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[1].obs == 4);
    CHECK(back.rows[1].reward == 0.0);
    CHECK(back.rows[1].done == 1);
}
