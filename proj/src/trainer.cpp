#include "vesselsynth/trainer.hpp"

#include "vesselsynth/rng.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace vsynth {

std::array<double, 3> compute_class_weights(const std::vector<VesselTree>& corpus) {
    if (corpus.empty()) throw ValidationError("empty corpus");
    std::array<std::int64_t, 3> counts{0, 0, 0};
    for (const VesselTree& t : corpus) {
        for (int i = 0; i < t.size(); ++i) {
            counts[static_cast<std::size_t>(t.num_children(i))] += 1;
        }
    }
    std::array<double, 3> w{};
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            throw ValidationError("class " + std::to_string(c) +
                                  " absent from corpus; class weight undefined");
        }
        w[static_cast<std::size_t>(c)] = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        sum += w[static_cast<std::size_t>(c)];
    }
    for (double& v : w) v *= 3.0 / sum;
    return w;
}

double node_weight(const TreeStats& stats, int node_index) {
    if (node_index < 0 || node_index >= static_cast<int>(stats.subtree_size.size())) {
        throw ValidationError("unknown node index " + std::to_string(node_index));
    }
    return static_cast<double>(stats.subtree_size[static_cast<std::size_t>(node_index)]) /
           static_cast<double>(stats.node_count);
}

TrainResult train(const std::vector<VesselTree>& corpus, const TrainConfig& config,
                  const TrainCallbacks& callbacks) {
    if (corpus.empty()) throw ValidationError("empty corpus");
    if (config.epochs < 1) throw ValidationError("epochs must be >= 1");
    if (config.batch_size < 1) throw ValidationError("batch_size must be >= 1");

    std::vector<TreeStats> stats;
    stats.reserve(corpus.size());
    for (const VesselTree& t : corpus) {
        stats.push_back(compute_stats(t));
        if (stats.back().depth > config.max_depth) {
            throw ValidationError("corpus tree exceeds max_depth " +
                                  std::to_string(config.max_depth) +
                                  "; run preprocessing first");
        }
    }
    const std::array<double, 3> class_weights = compute_class_weights(corpus);

    TrainResult result{init_parameters(rvnn_architecture(), config.seed), {}};
    ParameterStore& store = result.store;
    store.zero_gradients();

    const AdamHyper hyper{config.lr, 0.9, 0.999, 1e-8};
    Rng rng(splitmix64(config.seed ^ 0x7261696e5f726e67ULL)); // training stream

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> noise(static_cast<std::size_t>(kLatentDim));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);

        double sum_recon = 0.0, sum_topo = 0.0, sum_kl = 0.0;
        int correct = 0, total = 0;

        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(order.size(), cursor + static_cast<std::size_t>(config.batch_size));
            const double batch_n = static_cast<double>(batch_end - cursor);
            for (; cursor < batch_end; ++cursor) {
                const std::size_t ti = order[cursor];
                rng.fill_normal(noise);
                const TreeLossResult r =
                    rvnn_loss_and_grad(corpus[ti], stats[ti], noise, class_weights,
                                       config.alpha, config.gamma, store);
                sum_recon += r.loss.recon;
                sum_topo += r.loss.topo;
                sum_kl += r.loss.kl;
                correct += r.correct_nodes;
                total += r.total_nodes;
                if (!std::isfinite(r.loss.total)) {
                    throw RuntimeError("training diverged: non-finite loss at epoch " +
                                       std::to_string(epoch));
                }
            }
            store.scale_gradients(1.0 / batch_n);
            adam_step(store, hyper);
        }

        const double inv = 1.0 / static_cast<double>(corpus.size());
        EpochReport report;
        report.epoch = epoch;
        report.mean_loss = loss_total(sum_recon * inv, sum_topo * inv, sum_kl * inv,
                                      config.alpha, config.gamma);
        report.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
        report.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.reports.push_back(report);
        if (callbacks.on_epoch) callbacks.on_epoch(report);
        if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 &&
            callbacks.on_checkpoint) {
            callbacks.on_checkpoint(store, epoch);
        }
        if (callbacks.stop_when && callbacks.stop_when(report)) break;
    }
    return result;
}

double classifier_accuracy(const ParameterStore& params,
                           const std::vector<VesselTree>& corpus) {
    if (corpus.empty()) throw ValidationError("empty corpus");
    const std::vector<double> zero_noise(static_cast<std::size_t>(kLatentDim), 0.0);
    std::int64_t correct = 0, total = 0;
    for (const VesselTree& t : corpus) {
        const std::vector<double> code = encode_tree(t, params);
        const LatentSample s = latent_sample(code, params, zero_noise);
        const DecodedTree d = decode_tree_teacher_forced(s.z, t, params);
        for (int i = 0; i < t.size(); ++i) {
            const auto& logits = d.logits[static_cast<std::size_t>(i)];
            int best = 0;
            for (int c = 1; c < 3; ++c) {
                if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(best)]) best = c;
            }
            if (best == t.num_children(i)) correct += 1;
            total += 1;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

} // namespace vsynth
