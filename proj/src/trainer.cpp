#include "cdcl/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cdcl/dataset.hpp"
#include "cdcl/net/adam.hpp"
#include "cdcl/objective.hpp"
#include "cdcl/targets.hpp"

namespace cdcl {

namespace fs = std::filesystem;

namespace {

std::atomic<uint64_t> g_real_part_consumptions{0};

}  // namespace

uint64_t real_part_consumptions() { return g_real_part_consumptions.load(); }

std::string to_string(TrainMode m) {
    switch (m) {
        case TrainMode::SYN: return "syn";
        case TrainMode::NO_SP: return "no_sp";
        case TrainMode::CDCL: return "cdcl";
        case TrainMode::CDCL_REAL: return "cdcl_real";
    }
    throw std::invalid_argument("unknown train mode");
}

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "syn") return TrainMode::SYN;
    if (s == "no_sp") return TrainMode::NO_SP;
    if (s == "cdcl") return TrainMode::CDCL;
    if (s == "cdcl_real") return TrainMode::CDCL_REAL;
    throw std::invalid_argument("unknown train mode: " + s);
}

void validate(const TrainConfig& c) {
    validate(c.weights);
    net::validate(c.model);
    validate(c.decode);
    if (c.batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
    if (c.configuration != TrainMode::SYN && c.batch_size % 2 != 0)
        throw std::invalid_argument("train: mixed configurations need an even batch size");
    if (c.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
    if (!(c.lr > 0) || !std::isfinite(c.lr))
        throw std::invalid_argument("train: learning rate must be positive and finite");
    if (!(c.sigma > 0) || !(c.limb_width > 0))
        throw std::invalid_argument("train: sigma and limb_width must be positive");
    if (c.checkpoint_every < 0)
        throw std::invalid_argument("train: checkpoint_every must be >= 0");
    if (c.out_dir.empty()) throw std::invalid_argument("train: out_dir required");
    if (c.eval_protocol != "pascal6" && c.eval_protocol != "identity")
        throw std::invalid_argument("train: unknown eval protocol: " + c.eval_protocol);
}

EpochSampler::EpochSampler(size_t count, uint64_t seed) : rng_(seed) {
    if (count == 0) throw std::invalid_argument("EpochSampler: empty dataset");
    order_.resize(count);
    for (size_t i = 0; i < count; ++i) order_[i] = i;
    rng_.shuffle(order_);
}

size_t EpochSampler::next() {
    if (cursor_ == order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
    }
    return order_[cursor_++];
}

std::vector<BatchItem> mixed_batch(EpochSampler& real, EpochSampler& syn, int batch_size) {
    if (batch_size < 2 || batch_size % 2 != 0)
        throw std::invalid_argument("mixed_batch: batch size must be even and positive");
    std::vector<BatchItem> batch;
    batch.reserve(batch_size);
    for (int i = 0; i < batch_size / 2; ++i) batch.push_back({Domain::real, real.next()});
    for (int i = 0; i < batch_size / 2; ++i) batch.push_back({Domain::synthetic, syn.next()});
    return batch;
}

namespace {

std::vector<TargetBundle> compile_targets(const std::vector<AnnotatedSample>& samples,
                                          const TrainConfig& c, bool strip_parts,
                                          const char* which) {
    std::vector<TargetBundle> out;
    out.reserve(samples.size());
    for (const AnnotatedSample& s : samples) {
        if (s.skeleton != c.model.spec.name)
            throw std::invalid_argument(std::string("train: ") + which + " sample uses skeleton '" +
                                        s.skeleton + "' but the model expects '" +
                                        c.model.spec.name + "'");
        TargetBundle t =
            make_targets(s, c.model.spec, c.model.taxonomy, c.model.output_stride, c.sigma,
                         c.limb_width);
        if (strip_parts) {
            t.B.clear();
            t.has_parts = false;
        }
        out.push_back(std::move(t));
    }
    return out;
}

// Forward, weighted loss gradients, backward. Adds this sample's unweighted
// term values into `b`. Zero-weighted terms are skipped outright, so their
// head gradients stay identically zero.
void accumulate_sample(net::Model& model, const AnnotatedSample& s, const TargetBundle& t,
                       const LossWeights& w, bool real, bool allow_real_parts,
                       LossBreakdown& b) {
    net::Activations acts;
    ModelOutput out = net::forward(model, s.image, &acts);
    if (out.K_hat.h != t.h || out.K_hat.w != t.w)
        throw std::logic_error("train: target grid does not match the model output grid");

    const Reduction red = w.reduction;
    net::OutputGrads g;
    g.dK = Tensor(out.K_hat.c, t.h, t.w);
    g.dP = Tensor(out.P_hat.c, t.h, t.w);
    g.dB = Tensor(out.B_hat.c, t.h, t.w);

    const double w_pose = real ? w.alpha : w.beta;
    if (w_pose != 0.0) {
        double lk = loss_kpts(t.K.data(), out.K_hat.v.data(), t.M.data(), t.J, t.h, t.w, red);
        double lp = loss_paf(t.P.data(), out.P_hat.v.data(), t.M.data(), t.C, t.h, t.w, red);
        loss_kpts_grad(t.K.data(), out.K_hat.v.data(), t.M.data(), t.J, t.h, t.w, red,
                       g.dK.v.data());
        loss_paf_grad(t.P.data(), out.P_hat.v.data(), t.M.data(), t.C, t.h, t.w, red,
                      g.dP.v.data());
        const float wp = static_cast<float>(w_pose);
        for (float& x : g.dK.v) x *= wp;
        for (float& x : g.dP.v) x *= wp;
        (real ? b.kpts_r : b.kpts_s) += lk;
        (real ? b.paf_r : b.paf_s) += lp;
    }
    if (t.has_parts && w.gamma != 0.0) {
        if (real) {
            if (!allow_real_parts)
                throw std::logic_error("train: real part labels leaked past the firewall");
            g_real_part_consumptions.fetch_add(1, std::memory_order_relaxed);
        }
        double lb = loss_part(t.B.data(), out.B_hat.v.data(), t.M.data(), t.Z, t.h, t.w, red);
        loss_part_grad(t.B.data(), out.B_hat.v.data(), t.M.data(), t.Z, t.h, t.w, red,
                       g.dB.v.data());
        const float wg = static_cast<float>(w.gamma);
        for (float& x : g.dB.v) x *= wg;
        (real ? b.part_r : b.part_s) += lb;
    }
    net::backward(model, acts, g);
}

std::string checkpoint_path(const std::string& out_dir, int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ckpt-%06d.bin", step);
    return out_dir + "/" + buf;
}

void snapshot(const net::Model& m, std::vector<std::vector<float>>& into) {
    into.resize(m.params.size());
    for (size_t i = 0; i < m.params.size(); ++i) into[i] = m.params[i].w;
}

void restore(net::Model& m, const std::vector<std::vector<float>>& from) {
    for (size_t i = 0; i < m.params.size(); ++i) m.params[i].w = from[i];
}

bool params_finite(const net::Model& m) {
    for (const net::Param& p : m.params)
        for (float x : p.w)
            if (!std::isfinite(x)) return false;
    return true;
}

EvalRow eval_model(const net::Model& model, const std::vector<AnnotatedSample>& samples,
                   const TrainConfig& c) {
    if (c.eval_protocol == "pascal6") {
        if (c.model.taxonomy.name != "body14")
            throw std::invalid_argument("eval: the pascal6 protocol needs a body14 model");
        return evaluate(model, samples, projection_body14_to_pascal6(), pascal_part_taxonomy(),
                        c.decode, c.eval_include_background);
    }
    return evaluate(model, samples, identity_projection(c.model.taxonomy), c.model.taxonomy,
                    c.decode, c.eval_include_background);
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<AnnotatedSample>& real,
                  const std::vector<AnnotatedSample>& synthetic) {
    validate(config);
    const bool syn_only = config.configuration == TrainMode::SYN;
    const bool allow_real_parts = config.configuration == TrainMode::CDCL_REAL;
    if (synthetic.empty()) throw std::invalid_argument("train: synthetic dataset is empty");
    if (!syn_only && real.empty()) throw std::invalid_argument("train: real dataset is empty");

    std::vector<TargetBundle> syn_targets =
        compile_targets(synthetic, config, /*strip_parts=*/false, "synthetic");
    std::vector<TargetBundle> real_targets =
        compile_targets(real, config, /*strip_parts=*/!allow_real_parts, "real");

    fs::create_directories(config.out_dir);

    TrainResult r;
    r.model = net::build_model(config.model);
    r.log_path = config.out_dir + "/train_log.csv";
    r.final_checkpoint = config.out_dir + "/ckpt-final.bin";

    std::ofstream log(r.log_path);
    if (!log) throw std::runtime_error("train: cannot write " + r.log_path);
    log << csv_header(allow_real_parts) << '\n' << std::flush;

    net::save_checkpoint(r.model, checkpoint_path(config.out_dir, 0));

    EpochSampler syn_sampler(synthetic.size(), splitmix64(config.seed ^ 0x73796e2d69647873ULL));
    std::optional<EpochSampler> real_sampler;
    if (!syn_only)
        real_sampler.emplace(real.size(), splitmix64(config.seed ^ 0x7265616c2d696478ULL));

    net::Adam opt(config.lr);
    std::vector<std::vector<float>> last_good;

    for (int step = 0; step < config.steps; ++step) {
        net::zero_grad(r.model);
        LossBreakdown b;
        std::vector<BatchItem> batch;
        if (syn_only) {
            for (int i = 0; i < config.batch_size; ++i)
                batch.push_back({Domain::synthetic, syn_sampler.next()});
        } else {
            batch = mixed_batch(*real_sampler, syn_sampler, config.batch_size);
        }
        for (const BatchItem& item : batch) {
            const bool is_real = item.domain == Domain::real;
            const AnnotatedSample& s = is_real ? real[item.index] : synthetic[item.index];
            const TargetBundle& t =
                is_real ? real_targets[item.index] : syn_targets[item.index];
            accumulate_sample(r.model, s, t, config.weights, is_real, allow_real_parts, b);
        }
        b.total = config.weights.alpha * (b.kpts_r + b.paf_r) +
                  config.weights.beta * (b.kpts_s + b.paf_s) +
                  config.weights.gamma * (b.part_s + b.part_r);
        log << csv_row(step, b, allow_real_parts) << '\n' << std::flush;
        r.history.push_back(b);

        if (!std::isfinite(b.total)) {
            r.aborted = true;  // parameters were not updated with this batch
            break;
        }
        snapshot(r.model, last_good);
        opt.step(r.model);
        if (!params_finite(r.model)) {
            restore(r.model, last_good);
            r.aborted = true;
            break;
        }
        ++r.steps_completed;
        if (config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0)
            net::save_checkpoint(r.model, checkpoint_path(config.out_dir, step + 1));
    }

    net::save_checkpoint(r.model, r.final_checkpoint);
    return r;
}

TrainResult train(const TrainConfig& config) {
    validate(config);
    std::vector<AnnotatedSample> synthetic = load_dataset(config.syn_manifest);
    std::vector<AnnotatedSample> real;
    if (config.configuration != TrainMode::SYN) real = load_dataset(config.real_manifest);
    return train(config, real, synthetic);
}

RunResult run_configuration(TrainMode name, const TrainConfig& shared) {
    TrainConfig c = shared;
    c.configuration = name;
    if (name == TrainMode::SYN) c.weights.alpha = 0.0;
    if (name == TrainMode::NO_SP) c.weights.beta = 0.0;
    c.out_dir = shared.out_dir + "/" + to_string(name);

    RunResult r;
    r.train = train(c);
    std::vector<AnnotatedSample> eval_samples = load_dataset(c.eval_manifest);
    r.eval = eval_model(r.train.model, eval_samples, c);
    r.csv = eval_csv_row(to_string(name), c.seed, r.eval);

    std::ofstream out(c.out_dir + "/eval.csv");
    out << eval_csv_header(r.eval.class_names) << '\n' << r.csv << '\n';
    return r;
}

std::vector<SweepCell> sweep(const std::vector<double>& beta_values,
                             const std::vector<double>& gamma_values,
                             const TrainConfig& shared) {
    if (beta_values.empty() || gamma_values.empty())
        throw std::invalid_argument("sweep: value lists must be non-empty");
    fs::create_directories(shared.out_dir);
    std::ofstream csv(shared.out_dir + "/sweep.csv");
    if (!csv) throw std::runtime_error("sweep: cannot write " + shared.out_dir + "/sweep.csv");
    csv << "beta,gamma,miou\n" << std::flush;

    std::vector<AnnotatedSample> eval_samples = load_dataset(shared.eval_manifest);
    std::vector<SweepCell> cells;
    for (double beta : beta_values) {
        for (double gamma : gamma_values) {
            TrainConfig c = shared;
            c.configuration = TrainMode::CDCL;
            c.weights.alpha = 1.0;
            c.weights.beta = beta;
            c.weights.gamma = gamma;
            char buf[64];
            std::snprintf(buf, sizeof buf, "sweep-b%g-g%g", beta, gamma);
            c.out_dir = shared.out_dir + "/" + buf;

            TrainResult tr = train(c);
            EvalRow row = eval_model(tr.model, eval_samples, c);
            SweepCell cell{beta, gamma, row.report.mean, c.out_dir};
            cells.push_back(cell);
            char line[96];
            std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g", beta, gamma, row.report.mean);
            csv << line << '\n' << std::flush;
        }
    }
    return cells;
}

}  // namespace cdcl
