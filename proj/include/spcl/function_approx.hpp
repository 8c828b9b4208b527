#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spcl/core_math.hpp"
#include "spcl/rng.hpp"

namespace spcl {

enum class TrunkKind { Tabular, Linear, Mlp };
enum class Activation { Tanh, Relu };
enum class PolicyHead { Sparsemax, Softmax };
enum class LambdaFactor { PerAction, Scalar };

struct ModelSpec {
    TrunkKind trunk = TrunkKind::Tabular;
    std::vector<int> hidden;  // Mlp only
    Activation activation = Activation::Tanh;
    PolicyHead policy = PolicyHead::Sparsemax;
    bool unified = false;
    LambdaFactor lambda_factor = LambdaFactor::PerAction;
};

struct ModelDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat trainable parameter vector with named slices (theta/phi/rho, or
/// psi/rho for the unified model). Slice boundaries are fixed at
/// construction.
struct ParamVector {
    std::vector<double> data;
    struct Slice {
        std::string name;
        std::size_t offset = 0;
        std::size_t size = 0;
    };
    std::vector<Slice> slices;

    std::span<double> slice(const std::string& name) {
        for (const auto& s : slices)
            if (s.name == name) return {data.data() + s.offset, s.size};
        throw std::invalid_argument("ParamVector: no slice named " + name);
    }
    std::span<const double> slice(const std::string& name) const {
        for (const auto& s : slices)
            if (s.name == name) return {data.data() + s.offset, s.size};
        throw std::invalid_argument("ParamVector: no slice named " + name);
    }
    ParamVector zeros_like() const {
        ParamVector g;
        g.data.assign(data.size(), 0.0);
        g.slices = slices;
        return g;
    }
    double norm() const {
        double acc = 0.0;
        for (double x : data) acc += x * x;
        return std::sqrt(acc);
    }
};

/// All model heads evaluated at one input. The constraints hold by
/// construction: lambda_a * mu_a = 0 exactly and Lambda in [-alpha/2, 0].
struct ModelOutputs {
    double v = 0.0;
    PolicyDistribution mu;
    std::vector<double> lambda;
    double Lambda = 0.0;
    ActionScores raw_scores;  // policy scores f (unified: Q)
};

/// Upstream gradients on the heads; empty vectors mean zero. dlogmu is the
/// gradient on log mu_a (softmax models), kept separate for stability.
struct OutputGrads {
    double dv = 0.0;
    double dLambda = 0.0;
    std::vector<double> dmu;
    std::vector<double> dlambda;
    std::vector<double> dlogmu;
};

namespace detail {

/// One parameter group: a lookup table (Tabular) or feedforward net
/// (Linear = no hidden layers, Mlp = hidden layers + activation).
/// Feedforward layout per layer: weights row-major [out][in], then biases.
struct Net {
    TrunkKind kind = TrunkKind::Tabular;
    int in_dim = 0;  // Tabular: number of table rows
    int out_dim = 0;
    std::vector<int> hidden;
    Activation act = Activation::Tanh;

    std::size_t param_count() const {
        if (kind == TrunkKind::Tabular) return static_cast<std::size_t>(in_dim) * out_dim;
        std::size_t total = 0;
        int prev = in_dim;
        for (int h : hidden) {
            total += static_cast<std::size_t>(prev + 1) * h;
            prev = h;
        }
        total += static_cast<std::size_t>(prev + 1) * out_dim;
        return total;
    }

    struct Cache {
        int row = -1;                           // Tabular
        std::vector<std::vector<double>> post;  // post[0] = input, then layer outputs
        std::vector<std::vector<double>> pre;   // pre-activation per hidden layer
        std::vector<double> out;
    };

    static double activate(Activation a, double z) { return a == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0); }
    static double activate_grad(Activation a, double z, double post) {
        return a == Activation::Tanh ? 1.0 - post * post : (z > 0.0 ? 1.0 : 0.0);
    }

    void forward(std::span<const double> params, std::span<const double> input, Cache& c) const {
        c.out.assign(out_dim, 0.0);
        if (kind == TrunkKind::Tabular) {
            c.row = static_cast<int>(input[0]);
            if (c.row < 0 || c.row >= in_dim) throw std::out_of_range("Net: tabular index out of range");
            for (int o = 0; o < out_dim; ++o) c.out[o] = params[static_cast<std::size_t>(c.row) * out_dim + o];
            return;
        }
        c.post.assign(1, std::vector<double>(input.begin(), input.end()));
        c.pre.clear();
        std::size_t off = 0;
        int prev = in_dim;
        for (std::size_t l = 0; l <= hidden.size(); ++l) {
            const bool last = (l == hidden.size());
            const int width = last ? out_dim : hidden[l];
            std::vector<double> z(width);
            const std::vector<double>& h = c.post.back();
            for (int o = 0; o < width; ++o) {
                double acc = params[off + static_cast<std::size_t>(width) * prev + o];  // bias
                const double* w = &params[off + static_cast<std::size_t>(o) * prev];
                for (int i = 0; i < prev; ++i) acc += w[i] * h[i];
                z[o] = acc;
            }
            off += static_cast<std::size_t>(prev + 1) * width;
            if (last) {
                c.out = std::move(z);
            } else {
                c.pre.push_back(z);
                for (double& zv : z) zv = activate(act, zv);
                c.post.push_back(std::move(z));
            }
            prev = width;
        }
    }

    void backward(std::span<const double> params, const Cache& c, std::span<const double> dout,
                  std::span<double> grad) const {
        if (kind == TrunkKind::Tabular) {
            for (int o = 0; o < out_dim; ++o) grad[static_cast<std::size_t>(c.row) * out_dim + o] += dout[o];
            return;
        }
        // offsets of each layer's parameters
        std::vector<std::size_t> offs;
        std::size_t off = 0;
        int prev = in_dim;
        for (std::size_t l = 0; l <= hidden.size(); ++l) {
            const int width = (l == hidden.size()) ? out_dim : hidden[l];
            offs.push_back(off);
            off += static_cast<std::size_t>(prev + 1) * width;
            prev = width;
        }
        std::vector<double> delta(dout.begin(), dout.end());
        for (int l = static_cast<int>(hidden.size()); l >= 0; --l) {
            const int width = (l == static_cast<int>(hidden.size())) ? out_dim : hidden[l];
            const int in_w = (l == 0) ? in_dim : hidden[l - 1];
            const std::vector<double>& h = c.post[l];
            for (int o = 0; o < width; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                double* gw = &grad[offs[l] + static_cast<std::size_t>(o) * in_w];
                for (int i = 0; i < in_w; ++i) gw[i] += d * h[i];
                grad[offs[l] + static_cast<std::size_t>(width) * in_w + o] += d;
            }
            if (l == 0) break;
            std::vector<double> prev_delta(in_w, 0.0);
            for (int o = 0; o < width; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                const double* w = &params[offs[l] + static_cast<std::size_t>(o) * in_w];
                for (int i = 0; i < in_w; ++i) prev_delta[i] += d * w[i];
            }
            for (int i = 0; i < in_w; ++i)
                prev_delta[i] *= activate_grad(act, c.pre[l - 1][i], c.post[l][i]);
            delta = std::move(prev_delta);
        }
    }

    void init(std::span<double> params, Rng& rng) const {
        if (kind == TrunkKind::Tabular) {
            std::fill(params.begin(), params.end(), 0.0);  // zero table: uniform early supports
            return;
        }
        std::size_t off = 0;
        int prev = in_dim;
        for (std::size_t l = 0; l <= hidden.size(); ++l) {
            const int width = (l == hidden.size()) ? out_dim : hidden[l];
            const double s = 1.0 / std::sqrt(static_cast<double>(prev));
            for (std::size_t i = 0; i < static_cast<std::size_t>(width) * prev; ++i)
                params[off + i] = uniform_in(rng, -s, s);
            for (int o = 0; o < width; ++o) params[off + static_cast<std::size_t>(width) * prev + o] = 0.0;
            off += static_cast<std::size_t>(prev + 1) * width;
            prev = width;
        }
    }
};

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace detail

/// Parameterized (V, mu, lambda, Lambda) model with the constraint-satisfying
/// head constructions:
///   mu      = (f - G(f))^+                      (sparse policy; projection identity)
///   lambda  = (G(f) - f)^+ * exp(aux)           (so lambda_a mu_a = 0 exactly)
///   Lambda  = -alpha/2 * sigmoid(u)
///   v       = scalar head
/// Softmax models use mu = softmax(f) with no multiplier heads. The unified
/// variant derives v = alpha*spmax(Q/alpha) and mu = sparsemax(Q, alpha) from
/// a single Q trunk.
///
/// Parameter groups / counts (tabular trunk over n rows, A actions):
///   separate sparse: theta n*A, phi n, rho n*(A+1) (per-action factor) or n*2
///   separate soft:   theta n*A, phi n
///   unified sparse:  psi n*A,          rho as above
class Model {
public:
    Model(const ModelSpec& spec, int obs_dim, int n_actions, double alpha)
        : spec_(spec), obs_dim_(obs_dim), n_actions_(n_actions), alpha_(alpha) {
        if (obs_dim < 1 || n_actions < 1) throw std::invalid_argument("Model: invalid dims");
        if (!(alpha > 0.0)) throw std::invalid_argument("Model: alpha must be positive");
        if (spec.unified && spec.policy == PolicyHead::Softmax)
            throw std::invalid_argument("Model: unified variant requires the sparse policy head");
        auto trunk = [&](int out) {
            detail::Net n;
            n.kind = spec.trunk;
            n.in_dim = obs_dim;
            n.out_dim = out;
            n.hidden = spec.trunk == TrunkKind::Mlp ? spec.hidden : std::vector<int>{};
            n.act = spec.activation;
            return n;
        };
        const int rho_out = (spec.lambda_factor == LambdaFactor::PerAction ? n_actions : 1) + 1;
        if (spec.unified) {
            nets_ = {trunk(n_actions), trunk(rho_out)};
            names_ = {"psi", "rho"};
        } else if (spec.policy == PolicyHead::Sparsemax) {
            nets_ = {trunk(n_actions), trunk(1), trunk(rho_out)};
            names_ = {"theta", "phi", "rho"};
        } else {
            nets_ = {trunk(n_actions), trunk(1)};
            names_ = {"theta", "phi"};
        }
        std::size_t off = 0;
        for (std::size_t i = 0; i < nets_.size(); ++i) {
            params_.slices.push_back({names_[i], off, nets_[i].param_count()});
            off += nets_[i].param_count();
        }
        params_.data.assign(off, 0.0);
    }

    const ModelSpec& spec() const { return spec_; }
    int obs_dim() const { return obs_dim_; }
    int n_actions() const { return n_actions_; }
    double alpha() const { return alpha_; }
    ParamVector& params() { return params_; }
    const ParamVector& params() const { return params_; }

    void init_params(Rng& rng) {
        for (std::size_t i = 0; i < nets_.size(); ++i) nets_[i].init(params_.slice(names_[i]), rng);
    }

    struct Cache {
        std::vector<detail::Net::Cache> nets;
        ModelOutputs out;
    };

    Cache forward(std::span<const double> obs) const {
        if (static_cast<int>(obs.size()) != expected_input_size())
            throw std::invalid_argument("Model::forward: input size mismatch");
        Cache c;
        c.nets.resize(nets_.size());
        for (std::size_t i = 0; i < nets_.size(); ++i)
            nets_[i].forward(params_.slice(names_[i]), obs, c.nets[i]);

        ModelOutputs& o = c.out;
        o.raw_scores = c.nets[0].out;
        const int A = n_actions_;
        for (std::size_t i = 0; i < nets_.size(); ++i)
            for (double out_v : c.nets[i].out)
                if (!std::isfinite(out_v)) throw ModelDivergence("Model::forward: non-finite trunk output");
        if (spec_.policy == PolicyHead::Softmax) {
            o.mu = softmax_policy(o.raw_scores, 1.0);
            o.lambda.assign(A, 0.0);
            o.Lambda = 0.0;
            o.v = c.nets[1].out[0];
        } else {
            ActionScores z = o.raw_scores;
            if (spec_.unified)
                for (double& q : z) q /= alpha_;
            o.mu = sparsemax_from_scores(z);
            const double g = g_threshold(z, support_set(z));
            const detail::Net::Cache& rho = spec_.unified ? c.nets[1] : c.nets[2];
            o.lambda.resize(A);
            for (int a = 0; a < A; ++a) {
                const double aux = spec_.lambda_factor == LambdaFactor::PerAction ? rho.out[a] : rho.out[0];
                o.lambda[a] = std::max(g - z[a], 0.0) * std::exp(aux);
            }
            o.Lambda = -0.5 * alpha_ * detail::sigmoid(rho.out.back());
            o.v = spec_.unified ? alpha_ * spmax(z) : c.nets[1].out[0];
        }
        double probe = o.v + o.Lambda;
        for (int a = 0; a < A; ++a) probe += o.mu.probs[a] + o.lambda[a] + o.raw_scores[a];
        if (!std::isfinite(probe)) throw ModelDivergence("Model::forward: non-finite head output");
        return c;
    }

    void backward(const Cache& c, const OutputGrads& up, ParamVector& grad) const {
        const int A = n_actions_;
        const ModelOutputs& o = c.out;
        if (spec_.policy == PolicyHead::Softmax) {
            std::vector<double> df(A, 0.0);
            for (int b = 0; b < A; ++b) {
                double acc = 0.0;
                for (int a = 0; a < A; ++a) {
                    const double j = (a == b ? 1.0 : 0.0) - o.mu.probs[b];
                    if (!up.dmu.empty()) acc += up.dmu[a] * o.mu.probs[a] * j;
                    if (!up.dlogmu.empty()) acc += up.dlogmu[a] * j;
                }
                df[b] = acc;
            }
            nets_[0].backward(params_.slice("theta"), c.nets[0], df, grad.slice("theta"));
            const double dv[1] = {up.dv};
            nets_[1].backward(params_.slice("phi"), c.nets[1], dv, grad.slice("phi"));
            return;
        }

        ActionScores z = o.raw_scores;
        if (spec_.unified)
            for (double& q : z) q /= alpha_;
        const std::vector<int> s = support_set(z);
        const double g = g_threshold(z, s);
        std::vector<char> in_s(A, 0);
        for (int a : s) in_s[a] = 1;
        const double inv = 1.0 / static_cast<double>(s.size());
        const detail::Net::Cache& rho = spec_.unified ? c.nets[1] : c.nets[2];

        // accumulate gradient on the pre-projection scores z
        std::vector<double> dz(A, 0.0);
        if (!up.dmu.empty()) {
            double sum_s = 0.0;
            for (int a : s) sum_s += up.dmu[a];
            for (int b : s) dz[b] += up.dmu[b] - sum_s * inv;
        }
        std::vector<double> daux(spec_.lambda_factor == LambdaFactor::PerAction ? A : 1, 0.0);
        if (!up.dlambda.empty()) {
            for (int a = 0; a < A; ++a) {
                if (in_s[a] || !(g - z[a] > 0.0)) continue;  // relu off-side: zero subgradient at the kink
                const double aux = spec_.lambda_factor == LambdaFactor::PerAction ? rho.out[a] : rho.out[0];
                const double factor = std::exp(aux);
                const double dl = up.dlambda[a];
                for (int b : s) dz[b] += dl * factor * inv;
                dz[a] -= dl * factor;
                daux[spec_.lambda_factor == LambdaFactor::PerAction ? a : 0] += dl * o.lambda[a];
            }
        }
        std::vector<double> drho(rho.out.size(), 0.0);
        for (std::size_t i = 0; i < daux.size(); ++i) drho[i] = daux[i];
        const double sig = detail::sigmoid(rho.out.back());
        drho.back() = up.dLambda * (-0.5 * alpha_) * sig * (1.0 - sig);

        if (spec_.unified) {
            std::vector<double> dq(A, 0.0);
            for (int a = 0; a < A; ++a) dq[a] = dz[a] / alpha_ + up.dv * o.mu.probs[a];
            nets_[0].backward(params_.slice("psi"), c.nets[0], dq, grad.slice("psi"));
            nets_[1].backward(params_.slice("rho"), c.nets[1], drho, grad.slice("rho"));
        } else {
            nets_[0].backward(params_.slice("theta"), c.nets[0], dz, grad.slice("theta"));
            const double dv[1] = {up.dv};
            nets_[1].backward(params_.slice("phi"), c.nets[1], dv, grad.slice("phi"));
            nets_[2].backward(params_.slice("rho"), c.nets[2], drho, grad.slice("rho"));
        }
    }

    int expected_input_size() const { return spec_.trunk == TrunkKind::Tabular ? 1 : obs_dim_; }

private:
    ModelSpec spec_;
    int obs_dim_;
    int n_actions_;
    double alpha_;
    std::vector<detail::Net> nets_;
    std::vector<std::string> names_;
    ParamVector params_;
};

/// Loads an exact witness into a tabular separate-head sparse model so the
/// heads reproduce (v, mu, lambda, Lambda) at every state:
/// f = mu on the support and -lambda off it (then G(f) = 0), aux = 0, and
/// u = logit(-2 Lambda / alpha) clamped to +-40 (sigmoid saturates exactly in
/// double precision at the clamp).
inline void load_tabular_witness(Model& model, const ValueFunction& v, const TabularPolicy& mu,
                                 const std::vector<double>& lambda, const std::vector<double>& Lambda) {
    if (model.spec().trunk != TrunkKind::Tabular || model.spec().unified ||
        model.spec().policy != PolicyHead::Sparsemax || model.spec().lambda_factor != LambdaFactor::PerAction)
        throw std::invalid_argument("load_tabular_witness: needs a tabular separate-head sparse model");
    const int n = static_cast<int>(v.size());
    const int A = model.n_actions();
    auto theta = model.params().slice("theta");
    auto phi = model.params().slice("phi");
    auto rho = model.params().slice("rho");
    for (int x = 0; x < n; ++x) {
        phi[x] = v[x];
        for (int a = 0; a < A; ++a) {
            const double p = mu.dist[x].probs[a];
            theta[static_cast<std::size_t>(x) * A + a] = p > 0.0 ? p : -lambda[static_cast<std::size_t>(x) * A + a];
            rho[static_cast<std::size_t>(x) * (A + 1) + a] = 0.0;
        }
        const double s = std::clamp(-2.0 * Lambda[x] / model.alpha(), 0.0, 1.0);
        double u;
        if (s <= detail::sigmoid(-40.0)) u = -40.0;
        else if (s >= detail::sigmoid(40.0)) u = 40.0;
        else u = std::log(s / (1.0 - s));
        rho[static_cast<std::size_t>(x) * (A + 1) + A] = u;
    }
}

/// Soft counterpart: tabular softmax model reproducing v and mu = softmax(logits).
inline void load_tabular_soft(Model& model, const ValueFunction& v, const std::vector<ActionScores>& logits) {
    if (model.spec().trunk != TrunkKind::Tabular || model.spec().policy != PolicyHead::Softmax)
        throw std::invalid_argument("load_tabular_soft: needs a tabular softmax model");
    const int n = static_cast<int>(v.size());
    const int A = model.n_actions();
    auto theta = model.params().slice("theta");
    auto phi = model.params().slice("phi");
    for (int x = 0; x < n; ++x) {
        phi[x] = v[x];
        for (int a = 0; a < A; ++a) theta[static_cast<std::size_t>(x) * A + a] = logits[x][a];
    }
}

// --- checkpoint io -------------------------------------------------------
// "SPCLCKPT" magic, u32 version, u32 header length, JSON header (spec, dims,
// alpha, slices), then the flat parameter array as raw little-endian doubles.
// The raw bytes make save/load round-trips bit-exact.

static_assert(std::endian::native == std::endian::little, "checkpoint io assumes a little-endian host");

namespace detail {
inline nlohmann::json spec_to_json(const ModelSpec& s) {
    nlohmann::json j;
    j["trunk"] = s.trunk == TrunkKind::Tabular ? "tabular" : (s.trunk == TrunkKind::Linear ? "linear" : "mlp");
    j["hidden"] = s.hidden;
    j["activation"] = s.activation == Activation::Tanh ? "tanh" : "relu";
    j["policy"] = s.policy == PolicyHead::Sparsemax ? "sparsemax" : "softmax";
    j["unified"] = s.unified;
    j["lambda_factor"] = s.lambda_factor == LambdaFactor::PerAction ? "per_action" : "scalar";
    return j;
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec s;
    const std::string trunk = j.at("trunk").get<std::string>();
    s.trunk = trunk == "tabular" ? TrunkKind::Tabular : (trunk == "linear" ? TrunkKind::Linear : TrunkKind::Mlp);
    s.hidden = j.at("hidden").get<std::vector<int>>();
    s.activation = j.at("activation").get<std::string>() == "tanh" ? Activation::Tanh : Activation::Relu;
    s.policy = j.at("policy").get<std::string>() == "sparsemax" ? PolicyHead::Sparsemax : PolicyHead::Softmax;
    s.unified = j.at("unified").get<bool>();
    s.lambda_factor =
        j.at("lambda_factor").get<std::string>() == "per_action" ? LambdaFactor::PerAction : LambdaFactor::Scalar;
    return s;
}
}  // namespace detail

inline void save_checkpoint(const Model& model, const std::string& path) {
    nlohmann::json header = detail::spec_to_json(model.spec());
    header["obs_dim"] = model.obs_dim();
    header["n_actions"] = model.n_actions();
    header["alpha"] = model.alpha();
    header["param_count"] = model.params().data.size();
    nlohmann::json slices = nlohmann::json::array();
    for (const auto& s : model.params().slices)
        slices.push_back({{"name", s.name}, {"offset", s.offset}, {"size", s.size}});
    header["slices"] = slices;
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write("SPCLCKPT", 8);
    const std::uint32_t version = 1;
    const std::uint32_t hlen = static_cast<std::uint32_t>(hs.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&hlen), 4);
    out.write(hs.data(), hs.size());
    out.write(reinterpret_cast<const char*>(model.params().data.data()),
              static_cast<std::streamsize>(model.params().data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_checkpoint: write failed");
}

inline Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "SPCLCKPT", 8) != 0) throw std::runtime_error("load_checkpoint: bad magic");
    std::uint32_t version = 0, hlen = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&hlen), 4);
    if (!in || version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    const nlohmann::json header = nlohmann::json::parse(hs);
    Model model(detail::spec_from_json(header), header.at("obs_dim").get<int>(),
                header.at("n_actions").get<int>(), header.at("alpha").get<double>());
    const std::size_t count = header.at("param_count").get<std::size_t>();
    if (count != model.params().data.size()) throw std::runtime_error("load_checkpoint: parameter count mismatch");
    in.read(reinterpret_cast<char*>(model.params().data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("load_checkpoint: truncated file");
    return model;
}

/// Central finite differences of fn() w.r.t. params, h = 1e-5 by default.
/// fn must read the current contents of params on each call.
template <class F>
std::vector<double> finite_difference_gradient(F&& fn, std::vector<double>& params, double h = 1e-5) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double up = fn();
        params[i] = saved - h;
        const double down = fn();
        params[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Fixed model-input layout over an episode window: one-hot blocks of the
/// last `window` observations (most recent first), then the last window-1
/// actions; positions before the episode start encode as all-zero blocks.
/// Tabular mode passes the raw observation index through (window must be 1).
struct WindowEncoder {
    int n_symbols = 0;
    int n_actions = 0;
    int window = 4;
    bool tabular = false;

    int input_dim() const { return tabular ? 1 : window * n_symbols + (window - 1) * n_actions; }

    std::vector<double> encode(std::span<const int> obs, std::span<const int> actions, int t) const {
        if (tabular) {
            if (window != 1) throw std::invalid_argument("WindowEncoder: tabular mode requires window 1");
            return {static_cast<double>(obs[t])};
        }
        std::vector<double> x(input_dim(), 0.0);
        for (int j = 0; j < window; ++j) {
            const int ti = t - j;
            if (ti < 0) break;
            x[static_cast<std::size_t>(j) * n_symbols + obs[ti]] = 1.0;
        }
        const int base = window * n_symbols;
        for (int j = 0; j + 1 < window; ++j) {
            const int ti = t - 1 - j;
            if (ti < 0) break;
            x[static_cast<std::size_t>(base) + static_cast<std::size_t>(j) * n_actions + actions[ti]] = 1.0;
        }
        return x;
    }
};

}  // namespace spcl
