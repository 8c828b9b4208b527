#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcl/mdp.hpp"
#include "spcl/rng.hpp"
#include "spcl/text.hpp"

namespace spcl {

/// done distinguishes true task termination from the step-cap cutoff
/// (truncated). Trainers bootstrap with the model value on truncation and
/// with zero on termination.
struct StepResult {
    int obs = 0;
    double reward = 0.0;
    bool done = false;
    bool truncated = false;
};

/// Episode protocol: deterministic given the reset seed and action sequence.
class EpisodeEnv {
public:
    virtual ~EpisodeEnv() = default;
    virtual int reset(std::uint64_t seed) = 0;  // returns the initial observation
    virtual StepResult step(int action) = 0;
    virtual int n_actions() const = 0;
    virtual int n_obs_symbols() const = 0;
};

enum class TaskKind { Copy, DuplicatedInput, RepeatCopy, Reverse, ReversedAddition };

inline const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Copy: return "copy";
        case TaskKind::DuplicatedInput: return "duplicated_input";
        case TaskKind::RepeatCopy: return "repeat_copy";
        case TaskKind::Reverse: return "reverse";
        case TaskKind::ReversedAddition: return "reversed_addition";
    }
    return "?";
}

inline TaskKind task_kind_from_string(const std::string& s) {
    if (s == "copy") return TaskKind::Copy;
    if (s == "duplicated_input") return TaskKind::DuplicatedInput;
    if (s == "repeat_copy") return TaskKind::RepeatCopy;
    if (s == "reverse") return TaskKind::Reverse;
    if (s == "reversed_addition") return TaskKind::ReversedAddition;
    throw std::invalid_argument("unknown task kind: " + s);
}

/// Tape actions are (move, write?, char) flattened to
///   a = move * (1 + vocab) + (write ? 1 + char : 0),
/// i.e. per move direction one move-only action followed by the vocab write
/// actions. Moves: 1D left=0 right=1; 2D adds up=2 down=3.
struct TapeAction {
    int move = 0;
    bool write = false;
    int ch = -1;
};

inline int encode_action(const TapeAction& t, int vocab) {
    return t.move * (1 + vocab) + (t.write ? 1 + t.ch : 0);
}

inline TapeAction decode_action(int action, int vocab) {
    TapeAction t;
    t.move = action / (1 + vocab);
    const int rest = action % (1 + vocab);
    t.write = rest > 0;
    t.ch = t.write ? rest - 1 : -1;
    return t;
}

/// Grid tape tasks. The agent reads the cell under its head (blank = vocab
/// index when one step off the written grid), emits characters to a separate
/// output stream, earns +1 per correct character and terminates on the first
/// wrong one or on completion. Episodes that never finish are cut at
/// 4 * target length steps.
class TapeEnv : public EpisodeEnv {
public:
    TapeEnv(TaskKind kind, int vocab, int min_len, int max_len)
        : kind_(kind), vocab_(vocab), min_len_(min_len), max_len_(max_len) {
        if (vocab < 2) throw std::invalid_argument("TapeEnv: vocab must be >= 2");
        if (min_len < 1 || max_len < min_len) throw std::invalid_argument("TapeEnv: bad length range");
    }

    int n_actions() const override { return moves() * (1 + vocab_); }
    int n_obs_symbols() const override { return vocab_ + 1; }  // characters + blank
    int moves() const { return kind_ == TaskKind::ReversedAddition ? 4 : 2; }
    int blank() const { return vocab_; }

    int reset(std::uint64_t seed) override {
        Rng rng(seed);
        grid_.clear();
        expected_.clear();
        if (kind_ == TaskKind::ReversedAddition) {
            const int n = uniform_int(rng, min_len_, max_len_);
            grid_.assign(2, std::vector<int>(n));
            for (int row = 0; row < 2; ++row)
                for (int col = 0; col < n; ++col) grid_[row][col] = uniform_int(rng, 0, vocab_ - 1);
            int carry = 0;
            for (int col = 0; col < n; ++col) {
                const int s = grid_[0][col] + grid_[1][col] + carry;
                expected_.push_back(s % vocab_);
                carry = s / vocab_;
            }
            if (carry > 0) expected_.push_back(carry);
        } else {
            const int len = uniform_int(rng, min_len_, max_len_);
            std::vector<int> base(len);
            for (int& c : base) c = uniform_int(rng, 0, vocab_ - 1);
            std::vector<int> tape;
            switch (kind_) {
                case TaskKind::Copy:
                    tape = base;
                    expected_ = base;
                    break;
                case TaskKind::DuplicatedInput:
                    for (int c : base) {
                        tape.push_back(c);
                        tape.push_back(c);
                    }
                    expected_ = base;
                    break;
                case TaskKind::RepeatCopy:
                    tape = base;
                    expected_ = base;
                    expected_.insert(expected_.end(), base.rbegin(), base.rend());
                    expected_.insert(expected_.end(), base.begin(), base.end());
                    break;
                case TaskKind::Reverse:
                    tape = base;
                    expected_.assign(base.rbegin(), base.rend());
                    break;
                default:
                    break;
            }
            grid_.assign(1, tape);
        }
        row_ = 0;
        col_ = 0;
        emitted_ = 0;
        steps_ = 0;
        done_ = false;
        return observe();
    }

    StepResult step(int action) override {
        if (done_) throw std::logic_error("TapeEnv::step: episode already finished");
        if (action < 0 || action >= n_actions()) throw std::out_of_range("TapeEnv::step: bad action");
        const TapeAction t = decode_action(action, vocab_);
        StepResult res;
        if (t.write) {
            if (t.ch == expected_[emitted_]) {
                res.reward = 1.0;
                ++emitted_;
                if (emitted_ == static_cast<int>(expected_.size())) res.done = true;
            } else {
                res.done = true;  // wrong character ends the episode
            }
        }
        // move with clamping; columns extend one blank cell beyond each edge
        const int ncols = static_cast<int>(grid_[0].size());
        switch (t.move) {
            case 0: col_ = std::max(col_ - 1, -1); break;
            case 1: col_ = std::min(col_ + 1, ncols); break;
            case 2: row_ = std::max(row_ - 1, 0); break;
            case 3: row_ = std::min(row_ + 1, static_cast<int>(grid_.size()) - 1); break;
            default: break;
        }
        ++steps_;
        if (!res.done && steps_ >= step_cap()) {
            res.done = true;
            res.truncated = true;
        }
        done_ = res.done;
        res.obs = observe();
        return res;
    }

    int target_length() const { return static_cast<int>(expected_.size()); }
    int step_cap() const { return 4 * target_length(); }
    const std::vector<int>& expected_output() const { return expected_; }
    const std::vector<std::vector<int>>& grid() const { return grid_; }

    /// Action sequence of a scripted per-task solver for the current
    /// instance; earns the full target-length reward.
    std::vector<int> oracle_actions() const {
        std::vector<int> acts;
        const int V = vocab_;
        auto move_write = [&](int mv, int ch) { acts.push_back(encode_action({mv, true, ch}, V)); };
        auto move_only = [&](int mv) { acts.push_back(encode_action({mv, false, -1}, V)); };
        const std::vector<int>& tape = grid_[0];
        const int L = static_cast<int>(tape.size());
        switch (kind_) {
            case TaskKind::Copy:
                for (int i = 0; i < L; ++i) move_write(1, tape[i]);
                break;
            case TaskKind::DuplicatedInput:
                for (int i = 0; i < L; i += 2) {
                    move_write(1, tape[i]);
                    move_only(1);
                }
                break;
            case TaskKind::Reverse:
                for (int i = 0; i < L; ++i) move_only(1);
                move_only(0);
                for (int i = L - 1; i >= 0; --i) move_write(0, tape[i]);
                break;
            case TaskKind::RepeatCopy:
                for (int i = 0; i < L; ++i) move_write(1, tape[i]);
                move_only(0);
                for (int i = L - 1; i >= 0; --i) move_write(0, tape[i]);
                move_only(1);
                for (int i = 0; i < L; ++i) move_write(1, tape[i]);
                break;
            case TaskKind::ReversedAddition: {
                const int n = static_cast<int>(grid_[0].size());
                int carry = 0;
                for (int col = 0; col < n; ++col) {
                    const int s = grid_[0][col] + grid_[1][col] + carry;
                    move_only(3);  // down to the second row
                    move_write(1, s % vocab_);
                    move_only(2);  // back up, now over the next column
                    carry = s / vocab_;
                }
                if (carry > 0) move_write(1, carry);
                break;
            }
        }
        return acts;
    }

private:
    int observe() const {
        const int ncols = static_cast<int>(grid_[0].size());
        if (col_ < 0 || col_ >= ncols) return blank();
        return grid_[row_][col_];
    }

    TaskKind kind_;
    int vocab_;
    int min_len_, max_len_;
    std::vector<std::vector<int>> grid_;
    std::vector<int> expected_;
    int row_ = 0, col_ = 0;
    int emitted_ = 0;
    int steps_ = 0;
    bool done_ = false;
};

/// Samples a concrete task instance: the environment is constructed and
/// reset with the given seed.
inline TapeEnv make_task(TaskKind kind, int vocab, int min_len, int max_len, std::uint64_t seed) {
    TapeEnv env(kind, vocab, min_len, max_len);
    env.reset(seed);
    return env;
}

/// Episodic wrapper around a TabularMDP: observation = state index, episodes
/// run to the horizon (truncated) or into a terminal state (done). start < 0
/// draws the initial state uniformly.
class TabularMDPEnv : public EpisodeEnv {
public:
    TabularMDPEnv(TabularMDP m, int horizon, int start = -1)
        : m_(std::move(m)), horizon_(horizon), start_(start) {
        m_.validate();
        if (horizon < 1) throw std::invalid_argument("TabularMDPEnv: horizon must be >= 1");
    }

    int n_actions() const override { return m_.n_actions; }
    int n_obs_symbols() const override { return m_.n_states; }
    const TabularMDP& mdp() const { return m_; }

    int reset(std::uint64_t seed) override {
        rng_.seed(seed);
        state_ = start_ >= 0 ? start_ : uniform_int(rng_, 0, m_.n_states - 1);
        steps_ = 0;
        done_ = false;
        return state_;
    }

    StepResult step(int action) override {
        if (done_) throw std::logic_error("TabularMDPEnv::step: episode already finished");
        StepResult res;
        res.reward = m_.r(state_, action);
        std::vector<double> row(m_.n_states);
        for (int y = 0; y < m_.n_states; ++y) row[y] = m_.p(state_, action, y);
        state_ = sample_categorical(rng_, row);
        ++steps_;
        if (m_.is_terminal(state_)) {
            res.done = true;
        } else if (steps_ >= horizon_) {
            res.done = true;
            res.truncated = true;
        }
        done_ = res.done;
        res.obs = state_;
        return res;
    }

private:
    TabularMDP m_;
    int horizon_;
    int start_;
    Rng rng_;
    int state_ = 0;
    int steps_ = 0;
    bool done_ = false;
};

inline TabularMDPEnv wrap_tabular(const TabularMDP& m, int horizon, int start = -1) {
    return TabularMDPEnv(m, horizon, start);
}

// --- trajectory dump -----------------------------------------------------
// Header line "# task=<kind> vocab=<V> seed=<seed>", then one line per step:
// t,obs,action,reward,done. obs is the observation *before* the action.

struct TrajectoryDump {
    std::string task;
    int vocab = 0;
    std::uint64_t seed = 0;
    struct Row {
        int t;
        int obs;
        int action;
        double reward;
        int done;
    };
    std::vector<Row> rows;
};

inline void write_trajectory(std::ostream& out, const TrajectoryDump& d) {
    out << "# task=" << d.task << " vocab=" << d.vocab << " seed=" << d.seed << '\n';
    out << "t,obs,action,reward,done\n";
    for (const auto& r : d.rows)
        out << r.t << ',' << r.obs << ',' << r.action << ',' << format_double(r.reward) << ',' << r.done << '\n';
}

inline TrajectoryDump read_trajectory(std::istream& in) {
    TrajectoryDump d;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw std::runtime_error("read_trajectory: missing header");
    std::istringstream hs(line.substr(2));
    std::string field;
    while (hs >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "task") d.task = val;
        else if (key == "vocab") d.vocab = std::stoi(val);
        else if (key == "seed") d.seed = std::stoull(val);
    }
    std::getline(in, line);  // column header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TrajectoryDump::Row r{};
        std::istringstream ls(line);
        char comma;
        ls >> r.t >> comma >> r.obs >> comma >> r.action >> comma >> r.reward >> comma >> r.done;
        if (!ls) throw std::runtime_error("read_trajectory: malformed row: " + line);
        d.rows.push_back(r);
    }
    return d;
}

}  // namespace spcl
