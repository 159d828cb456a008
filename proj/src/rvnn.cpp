#include "vesselsynth/rvnn.hpp"

#include "vesselsynth/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace vsynth {

const std::vector<LayerSpec>& rvnn_architecture() {
    static const std::vector<LayerSpec> arch = {
        {"enc.fc1", 4, 512},        {"enc.fc2", 512, 128},
        {"enc.right_fc1", 128, 512}, {"enc.right_fc2", 512, 128},
        {"enc.left_fc1", 128, 512},  {"enc.left_fc2", 512, 128},
        {"enc.fc3", 256, 128},
        {"samp.fc1", 128, 512},      {"samp.fc2mu", 512, 128},
        {"samp.fc2var", 512, 128},
        {"sampdec.fc1", 128, 256},   {"sampdec.fc2", 256, 128},
        {"dec.fc1", 128, 256},
        {"dec.fc_left1", 256, 256},  {"dec.fc_left2", 256, 128},
        {"dec.fc_right1", 256, 256}, {"dec.fc_right2", 256, 128},
        {"dec.fc2", 256, 128},       {"dec.fc3", 128, 4},
        {"cls.fc1", 128, 256},       {"cls.fc2", 256, 256},
        {"cls.fc3", 256, 3},
    };
    return arch;
}

namespace {

// Fixed layer indices into rvnn_architecture() order.
namespace li {
constexpr int enc_fc1 = 0, enc_fc2 = 1, enc_right_fc1 = 2, enc_right_fc2 = 3,
              enc_left_fc1 = 4, enc_left_fc2 = 5, enc_fc3 = 6, samp_fc1 = 7,
              samp_fc2mu = 8, samp_fc2var = 9, sampdec_fc1 = 10,
              sampdec_fc2 = 11, dec_fc1 = 12, dec_fc_left1 = 13,
              dec_fc_left2 = 14, dec_fc_right1 = 15, dec_fc_right2 = 16,
              dec_fc2 = 17, dec_fc3 = 18, cls_fc1 = 19, cls_fc2 = 20,
              cls_fc3 = 21;
} // namespace li

void require_rvnn(const ParameterStore& params) {
    if (!params.matches(rvnn_architecture())) {
        throw ValidationError("parameter store does not match the model architecture");
    }
}

void require_latent(std::span<const double> v, const char* what) {
    if (static_cast<int>(v.size()) != kLatentDim) {
        throw ValidationError(std::string(what) + " must have length " +
                              std::to_string(kLatentDim));
    }
}

struct Mlp2Cache {
    DenseCache c1, c2;
    std::vector<double> hidden, out;
};

void mlp2_forward(const DenseLayer& l1, const DenseLayer& l2,
                  std::span<const double> in, Mlp2Cache& c) {
    dense_forward(l1, in, Activation::leaky_relu, c.c1, c.hidden);
    dense_forward(l2, c.hidden, Activation::leaky_relu, c.c2, c.out);
}

void mlp2_backward(DenseLayer& l1, DenseLayer& l2, const Mlp2Cache& c,
                   std::span<const double> upstream, std::vector<double>& downstream) {
    std::vector<double> dh;
    dense_backward(l2, c.c2, Activation::leaky_relu, upstream, dh);
    dense_backward(l1, c.c1, Activation::leaky_relu, dh, downstream);
}

struct EncNodeTrace {
    Mlp2Cache feat;        // enc.fc1 -> enc.fc2 on the 4 node attributes
    Mlp2Cache left, right; // child-code transforms, filled when the child exists
    DenseCache fuse;       // enc.fc3 on concat(feature code, child aggregate)
    std::vector<double> code;
};

struct DecNodeTrace {
    DenseCache fc1;
    std::vector<double> h;
    DenseCache fc2;
    std::vector<double> feat_h;
    DenseCache fc3;
    std::vector<double> feats;
    DenseCache cls1, cls2, cls3;
    std::vector<double> cls_h1, cls_h2, logits;
    Mlp2Cache left, right; // child codes, always computed
};

struct ForwardPass {
    std::vector<int> postorder, preorder;
    std::vector<EncNodeTrace> enc; // by node index
    DenseCache samp_fc1_c;
    std::vector<double> samp_h;
    DenseCache mu_c, var_c;
    std::vector<double> mu, log_var, sigma, z, noise;
    Mlp2Cache g; // sample decoder
    std::vector<DecNodeTrace> dec; // by node index
};

void check_normalized(const VesselTree& tree) {
    constexpr double tol = 1e-6;
    for (const TreeNode& n : tree.nodes()) {
        for (double v : n.features.as_array()) {
            if (v < -tol || v > 1.0 + tol) {
                throw ValidationError("tree features are not normalized to [0,1]");
            }
        }
    }
}

void encoder_forward(const VesselTree& tree, const ParameterStore& p, ForwardPass& fp) {
    fp.postorder = tree.postorder();
    fp.enc.assign(static_cast<std::size_t>(tree.size()), EncNodeTrace{});
    for (int i : fp.postorder) {
        EncNodeTrace& t = fp.enc[static_cast<std::size_t>(i)];
        const auto feats = tree.node(i).features.as_array();
        mlp2_forward(p.layer(li::enc_fc1), p.layer(li::enc_fc2),
                     std::span<const double>(feats.data(), feats.size()), t.feat);
        std::vector<double> concat(256, 0.0);
        std::copy(t.feat.out.begin(), t.feat.out.end(), concat.begin());
        const TreeNode& n = tree.node(i);
        if (n.left != kNoChild) {
            mlp2_forward(p.layer(li::enc_left_fc1), p.layer(li::enc_left_fc2),
                         fp.enc[static_cast<std::size_t>(n.left)].code, t.left);
            kernels::axpy(1.0, t.left.out.data(), concat.data() + kLatentDim, kLatentDim);
        }
        if (n.right != kNoChild) {
            mlp2_forward(p.layer(li::enc_right_fc1), p.layer(li::enc_right_fc2),
                         fp.enc[static_cast<std::size_t>(n.right)].code, t.right);
            kernels::axpy(1.0, t.right.out.data(), concat.data() + kLatentDim, kLatentDim);
        }
        dense_forward(p.layer(li::enc_fc3), concat, Activation::leaky_relu, t.fuse, t.code);
    }
}

void bottleneck_forward(std::span<const double> code, std::span<const double> noise,
                        const ParameterStore& p, ForwardPass& fp) {
    dense_forward(p.layer(li::samp_fc1), code, Activation::leaky_relu, fp.samp_fc1_c, fp.samp_h);
    dense_forward(p.layer(li::samp_fc2mu), fp.samp_h, Activation::identity, fp.mu_c, fp.mu);
    dense_forward(p.layer(li::samp_fc2var), fp.samp_h, Activation::identity, fp.var_c, fp.log_var);
    fp.noise.assign(noise.begin(), noise.end());
    fp.sigma.resize(fp.log_var.size());
    fp.z.resize(fp.mu.size());
    for (std::size_t d = 0; d < fp.z.size(); ++d) {
        fp.sigma[d] = std::exp(0.5 * fp.log_var[d]);
        fp.z[d] = fp.mu[d] + fp.sigma[d] * fp.noise[d];
    }
}

void decoder_node_forward(std::span<const double> code, const ParameterStore& p,
                          DecNodeTrace& t) {
    dense_forward(p.layer(li::dec_fc1), code, Activation::leaky_relu, t.fc1, t.h);
    dense_forward(p.layer(li::dec_fc2), t.h, Activation::leaky_relu, t.fc2, t.feat_h);
    dense_forward(p.layer(li::dec_fc3), t.feat_h, Activation::identity, t.fc3, t.feats);
    dense_forward(p.layer(li::cls_fc1), code, Activation::leaky_relu, t.cls1, t.cls_h1);
    dense_forward(p.layer(li::cls_fc2), t.cls_h1, Activation::leaky_relu, t.cls2, t.cls_h2);
    dense_forward(p.layer(li::cls_fc3), t.cls_h2, Activation::identity, t.cls3, t.logits);
    mlp2_forward(p.layer(li::dec_fc_left1), p.layer(li::dec_fc_left2), t.h, t.left);
    mlp2_forward(p.layer(li::dec_fc_right1), p.layer(li::dec_fc_right2), t.h, t.right);
}

void decoder_forward_teacher(const VesselTree& target, const ParameterStore& p,
                             ForwardPass& fp) {
    mlp2_forward(p.layer(li::sampdec_fc1), p.layer(li::sampdec_fc2), fp.z, fp.g);
    fp.preorder = target.preorder();
    fp.dec.assign(static_cast<std::size_t>(target.size()), DecNodeTrace{});
    std::vector<std::vector<double>> incoming(static_cast<std::size_t>(target.size()));
    incoming[static_cast<std::size_t>(target.root())] = fp.g.out;
    for (int i : fp.preorder) {
        DecNodeTrace& t = fp.dec[static_cast<std::size_t>(i)];
        decoder_node_forward(incoming[static_cast<std::size_t>(i)], p, t);
        const TreeNode& n = target.node(i);
        if (n.left != kNoChild) incoming[static_cast<std::size_t>(n.left)] = t.left.out;
        if (n.right != kNoChild) incoming[static_cast<std::size_t>(n.right)] = t.right.out;
    }
}

struct LossAccum {
    double recon = 0.0, topo = 0.0, kl = 0.0;
    int correct = 0;
};

int argmax3(const std::vector<double>& v) {
    int best = 0;
    for (int c = 1; c < 3; ++c) {
        if (v[static_cast<std::size_t>(c)] > v[static_cast<std::size_t>(best)]) best = c;
    }
    return best;
}

double cross_entropy3(const std::vector<double>& logits, int label, std::array<double, 3>* probs) {
    const double m = std::max({logits[0], logits[1], logits[2]});
    double denom = 0.0;
    std::array<double, 3> e{};
    for (int c = 0; c < 3; ++c) {
        e[static_cast<std::size_t>(c)] = std::exp(logits[static_cast<std::size_t>(c)] - m);
        denom += e[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < 3; ++c) e[static_cast<std::size_t>(c)] /= denom;
    if (probs) *probs = e;
    return -std::log(e[static_cast<std::size_t>(label)]);
}

LossAccum compute_losses(const VesselTree& tree, const TreeStats& stats,
                         const std::array<double, 3>& class_weights,
                         const ForwardPass& fp) {
    LossAccum acc;
    const double n = static_cast<double>(tree.size());
    for (int i = 0; i < tree.size(); ++i) {
        const DecNodeTrace& t = fp.dec[static_cast<std::size_t>(i)];
        const auto target = tree.node(i).features.as_array();
        double sq = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double e = t.feats[static_cast<std::size_t>(k)] - target[static_cast<std::size_t>(k)];
            sq += e * e;
        }
        acc.recon += std::sqrt(sq) / n;

        const int label = stats.class_label[static_cast<std::size_t>(i)];
        const double node_w = static_cast<double>(stats.subtree_size[static_cast<std::size_t>(i)]) / n;
        acc.topo += class_weights[static_cast<std::size_t>(label)] * node_w *
                    cross_entropy3(t.logits, label, nullptr);
        if (argmax3(t.logits) == label) acc.correct += 1;
    }
    for (std::size_t d = 0; d < fp.mu.size(); ++d) {
        acc.kl += -0.5 * (1.0 + fp.log_var[d] - fp.mu[d] * fp.mu[d] - std::exp(fp.log_var[d]));
    }
    return acc;
}

void backward_pass(const VesselTree& tree, const TreeStats& stats,
                   const std::array<double, 3>& class_weights, double alpha,
                   double gamma, const ForwardPass& fp, ParameterStore& p) {
    const double n = static_cast<double>(tree.size());
    std::vector<std::vector<double>> dcode(static_cast<std::size_t>(tree.size()));

    // Decoder: children first, so each node's code gradient is complete
    // before its parent consumes it.
    for (auto it = fp.preorder.rbegin(); it != fp.preorder.rend(); ++it) {
        const int i = *it;
        const DecNodeTrace& t = fp.dec[static_cast<std::size_t>(i)];
        const TreeNode& node = tree.node(i);

        std::vector<double> dh(256, 0.0);
        std::vector<double> tmp;
        if (node.left != kNoChild) {
            mlp2_backward(p.layer(li::dec_fc_left1), p.layer(li::dec_fc_left2), t.left,
                          dcode[static_cast<std::size_t>(node.left)], tmp);
            kernels::axpy(1.0, tmp.data(), dh.data(), dh.size());
        }
        if (node.right != kNoChild) {
            mlp2_backward(p.layer(li::dec_fc_right1), p.layer(li::dec_fc_right2), t.right,
                          dcode[static_cast<std::size_t>(node.right)], tmp);
            kernels::axpy(1.0, tmp.data(), dh.data(), dh.size());
        }

        // reconstruction term: d/dfeats of ||feats - x|| / n
        const auto target = tree.node(i).features.as_array();
        std::array<double, 4> err{};
        double sq = 0.0;
        for (int k = 0; k < 4; ++k) {
            err[static_cast<std::size_t>(k)] = t.feats[static_cast<std::size_t>(k)] - target[static_cast<std::size_t>(k)];
            sq += err[static_cast<std::size_t>(k)] * err[static_cast<std::size_t>(k)];
        }
        const double dist = std::sqrt(sq);
        std::vector<double> dfeats(4, 0.0);
        if (dist > 0.0) {
            for (int k = 0; k < 4; ++k) dfeats[static_cast<std::size_t>(k)] = err[static_cast<std::size_t>(k)] / (dist * n);
        }
        dense_backward(p.layer(li::dec_fc3), t.fc3, Activation::identity, dfeats, tmp);
        std::vector<double> dtmp;
        dense_backward(p.layer(li::dec_fc2), t.fc2, Activation::leaky_relu, tmp, dtmp);
        kernels::axpy(1.0, dtmp.data(), dh.data(), dh.size());

        std::vector<double> dcode_i;
        dense_backward(p.layer(li::dec_fc1), t.fc1, Activation::leaky_relu, dh, dcode_i);

        // topology term
        const int label = stats.class_label[static_cast<std::size_t>(i)];
        std::array<double, 3> probs{};
        cross_entropy3(t.logits, label, &probs);
        const double w = alpha * class_weights[static_cast<std::size_t>(label)] *
                         static_cast<double>(stats.subtree_size[static_cast<std::size_t>(i)]) / n;
        std::vector<double> dlogits(3);
        for (int c = 0; c < 3; ++c) {
            dlogits[static_cast<std::size_t>(c)] = w * (probs[static_cast<std::size_t>(c)] - (c == label ? 1.0 : 0.0));
        }
        dense_backward(p.layer(li::cls_fc3), t.cls3, Activation::identity, dlogits, tmp);
        dense_backward(p.layer(li::cls_fc2), t.cls2, Activation::leaky_relu, tmp, dtmp);
        dense_backward(p.layer(li::cls_fc1), t.cls1, Activation::leaky_relu, dtmp, tmp);
        kernels::axpy(1.0, tmp.data(), dcode_i.data(), dcode_i.size());

        dcode[static_cast<std::size_t>(i)] = std::move(dcode_i);
    }

    // through the sample decoder into the latent
    std::vector<double> dz;
    mlp2_backward(p.layer(li::sampdec_fc1), p.layer(li::sampdec_fc2), fp.g,
                  dcode[static_cast<std::size_t>(tree.root())], dz);

    // reparameterization plus the KL term
    std::vector<double> dmu(fp.mu.size()), dlv(fp.log_var.size());
    for (std::size_t d = 0; d < fp.mu.size(); ++d) {
        dmu[d] = dz[d] + gamma * fp.mu[d];
        dlv[d] = dz[d] * fp.noise[d] * 0.5 * fp.sigma[d] +
                 gamma * 0.5 * (std::exp(fp.log_var[d]) - 1.0);
    }
    std::vector<double> dh1, dh2;
    dense_backward(p.layer(li::samp_fc2mu), fp.mu_c, Activation::identity, dmu, dh1);
    dense_backward(p.layer(li::samp_fc2var), fp.var_c, Activation::identity, dlv, dh2);
    kernels::axpy(1.0, dh2.data(), dh1.data(), dh1.size());
    std::vector<double> droot;
    dense_backward(p.layer(li::samp_fc1), fp.samp_fc1_c, Activation::leaky_relu, dh1, droot);

    // Encoder: parents first (reverse post-order), pushing gradients down
    // into child codes.
    std::vector<std::vector<double>> denc(static_cast<std::size_t>(tree.size()));
    denc[static_cast<std::size_t>(tree.root())] = std::move(droot);
    for (auto it = fp.postorder.rbegin(); it != fp.postorder.rend(); ++it) {
        const int i = *it;
        const EncNodeTrace& t = fp.enc[static_cast<std::size_t>(i)];
        std::vector<double> dconcat;
        dense_backward(p.layer(li::enc_fc3), t.fuse, Activation::leaky_relu,
                       denc[static_cast<std::size_t>(i)], dconcat);
        const std::span<const double> dphi(dconcat.data(), kLatentDim);
        const std::span<const double> dagg(dconcat.data() + kLatentDim, kLatentDim);
        std::vector<double> dx;
        mlp2_backward(p.layer(li::enc_fc1), p.layer(li::enc_fc2), t.feat, dphi, dx);
        const TreeNode& node = tree.node(i);
        if (node.left != kNoChild) {
            std::vector<double> dchild;
            mlp2_backward(p.layer(li::enc_left_fc1), p.layer(li::enc_left_fc2), t.left,
                          dagg, dchild);
            denc[static_cast<std::size_t>(node.left)] = std::move(dchild);
        }
        if (node.right != kNoChild) {
            std::vector<double> dchild;
            mlp2_backward(p.layer(li::enc_right_fc1), p.layer(li::enc_right_fc2), t.right,
                          dagg, dchild);
            denc[static_cast<std::size_t>(node.right)] = std::move(dchild);
        }
    }
}

TreeLossResult run_tree_loss(const VesselTree& tree, const TreeStats& stats,
                             std::span<const double> noise,
                             const std::array<double, 3>& class_weights,
                             double alpha, double gamma, const ParameterStore& params,
                             ParameterStore* grad_target) {
    require_rvnn(params);
    require_latent(noise, "noise");
    check_normalized(tree);
    if (stats.node_count != tree.size()) {
        throw ValidationError("tree stats do not match the tree");
    }

    ForwardPass fp;
    encoder_forward(tree, params, fp);
    bottleneck_forward(fp.enc[static_cast<std::size_t>(tree.root())].code, noise, params, fp);
    decoder_forward_teacher(tree, params, fp);

    const LossAccum acc = compute_losses(tree, stats, class_weights, fp);
    TreeLossResult result;
    result.loss = loss_total(acc.recon, acc.topo, acc.kl, alpha, gamma);
    result.correct_nodes = acc.correct;
    result.total_nodes = tree.size();

    if (grad_target != nullptr) {
        backward_pass(tree, stats, class_weights, alpha, gamma, fp, *grad_target);
    }
    return result;
}

} // namespace

std::vector<double> encode_tree(const VesselTree& tree, const ParameterStore& params) {
    require_rvnn(params);
    tree.validate(VesselTree::RadiusPolicy::allow_zero);
    check_normalized(tree);
    ForwardPass fp;
    encoder_forward(tree, params, fp);
    return fp.enc[static_cast<std::size_t>(tree.root())].code;
}

LatentSample latent_sample(std::span<const double> code, const ParameterStore& params,
                           std::span<const double> noise) {
    require_rvnn(params);
    require_latent(code, "code");
    require_latent(noise, "noise");
    ForwardPass fp;
    bottleneck_forward(code, noise, params, fp);
    return {fp.z, fp.mu, fp.log_var};
}

std::vector<double> decode_root(std::span<const double> z, const ParameterStore& params) {
    require_rvnn(params);
    require_latent(z, "z");
    Mlp2Cache g;
    mlp2_forward(params.layer(li::sampdec_fc1), params.layer(li::sampdec_fc2), z, g);
    return g.out;
}

NodeDecode decode_node(std::span<const double> code, const ParameterStore& params) {
    require_rvnn(params);
    require_latent(code, "code");
    DecNodeTrace t;
    decoder_node_forward(code, params, t);
    NodeDecode out;
    std::copy(t.feats.begin(), t.feats.end(), out.features.begin());
    std::copy(t.logits.begin(), t.logits.end(), out.logits.begin());
    out.left_code = t.left.out;
    out.right_code = t.right.out;
    return out;
}

DecodedTree decode_tree_teacher_forced(std::span<const double> z, const VesselTree& target,
                                       const ParameterStore& params) {
    require_rvnn(params);
    require_latent(z, "z");
    target.validate(VesselTree::RadiusPolicy::allow_zero);
    check_normalized(target);

    ForwardPass fp;
    fp.z.assign(z.begin(), z.end());
    decoder_forward_teacher(target, params, fp);

    DecodedTree out;
    out.features.resize(static_cast<std::size_t>(target.size()));
    out.logits.resize(static_cast<std::size_t>(target.size()));
    for (int i = 0; i < target.size(); ++i) {
        const DecNodeTrace& t = fp.dec[static_cast<std::size_t>(i)];
        std::copy(t.feats.begin(), t.feats.end(), out.features[static_cast<std::size_t>(i)].begin());
        std::copy(t.logits.begin(), t.logits.end(), out.logits[static_cast<std::size_t>(i)].begin());
        out.nodes_decoded += 1;
    }
    return out;
}

VesselTree decode_tree_free(std::span<const double> z, const ParameterStore& params,
                            int max_depth) {
    require_rvnn(params);
    require_latent(z, "z");
    if (max_depth < 1) throw ValidationError("max_depth must be >= 1");

    VesselTree tree;
    struct Item {
        std::vector<double> code;
        int parent; ///< -1 for root
        VesselTree::Slot slot;
        int depth;
    };
    std::vector<Item> stack;
    stack.push_back({decode_root(z, params), -1, VesselTree::Slot::right, 1});
    while (!stack.empty()) {
        Item item = std::move(stack.back());
        stack.pop_back();
        DecNodeTrace t;
        decoder_node_forward(item.code, params, t);
        NodeFeatures f;
        f.x = std::clamp(t.feats[0], 0.0, 1.0);
        f.y = std::clamp(t.feats[1], 0.0, 1.0);
        f.z = std::clamp(t.feats[2], 0.0, 1.0);
        f.r = std::clamp(t.feats[3], 0.0, 1.0);
        const int index = item.parent < 0 ? tree.add_root(f)
                                          : tree.add_child(item.parent, item.slot, f);
        int label = argmax3(t.logits);
        if (item.depth >= max_depth) label = 0;
        // push right first so the left subtree is expanded first
        if (label == 2) {
            stack.push_back({t.right.out, index, VesselTree::Slot::right, item.depth + 1});
            stack.push_back({t.left.out, index, VesselTree::Slot::left, item.depth + 1});
        } else if (label == 1) {
            stack.push_back({t.right.out, index, VesselTree::Slot::right, item.depth + 1});
        }
    }
    tree.validate(VesselTree::RadiusPolicy::allow_zero);
    return tree;
}

double loss_recon(const DecodedTree& decoded, const VesselTree& target) {
    if (static_cast<int>(decoded.features.size()) != target.size()) {
        throw ValidationError("decoded/target node count mismatch");
    }
    double sum = 0.0;
    for (int i = 0; i < target.size(); ++i) {
        const auto t = target.node(i).features.as_array();
        const auto& d = decoded.features[static_cast<std::size_t>(i)];
        double sq = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double e = d[static_cast<std::size_t>(k)] - t[static_cast<std::size_t>(k)];
            sq += e * e;
        }
        sum += std::sqrt(sq);
    }
    return sum / static_cast<double>(target.size());
}

double loss_topo(const DecodedTree& decoded, const VesselTree& target,
                 const TreeStats& stats, const std::array<double, 3>& class_weights) {
    if (static_cast<int>(decoded.logits.size()) != target.size()) {
        throw ValidationError("decoded/target node count mismatch");
    }
    double sum = 0.0;
    for (int i = 0; i < target.size(); ++i) {
        const int label = stats.class_label[static_cast<std::size_t>(i)];
        if (label < 0 || label > 2) throw ValidationError("invalid class label");
        const auto& l = decoded.logits[static_cast<std::size_t>(i)];
        std::vector<double> logits(l.begin(), l.end());
        sum += class_weights[static_cast<std::size_t>(label)] *
               (static_cast<double>(stats.subtree_size[static_cast<std::size_t>(i)]) /
                static_cast<double>(stats.node_count)) *
               cross_entropy3(logits, label, nullptr);
    }
    return sum;
}

double loss_kl(std::span<const double> mu, std::span<const double> log_var) {
    if (mu.size() != log_var.size()) throw ValidationError("mu/log_var length mismatch");
    double sum = 0.0;
    for (std::size_t d = 0; d < mu.size(); ++d) {
        sum += -0.5 * (1.0 + log_var[d] - mu[d] * mu[d] - std::exp(log_var[d]));
    }
    return sum;
}

LossBreakdown loss_total(double recon, double topo, double kl, double alpha, double gamma) {
    LossBreakdown out;
    out.recon = recon;
    out.topo = topo;
    out.kl = kl;
    out.alpha = alpha;
    out.gamma = gamma;
    out.total = recon + alpha * topo + gamma * kl;
    return out;
}

TreeLossResult rvnn_loss(const VesselTree& tree, const TreeStats& stats,
                         std::span<const double> noise,
                         const std::array<double, 3>& class_weights,
                         double alpha, double gamma, const ParameterStore& params) {
    return run_tree_loss(tree, stats, noise, class_weights, alpha, gamma, params, nullptr);
}

TreeLossResult rvnn_loss_and_grad(const VesselTree& tree, const TreeStats& stats,
                                  std::span<const double> noise,
                                  const std::array<double, 3>& class_weights,
                                  double alpha, double gamma, ParameterStore& params) {
    return run_tree_loss(tree, stats, noise, class_weights, alpha, gamma, params, &params);
}

std::array<double, 3> softmax3(const std::array<double, 3>& logits) {
    std::vector<double> l(logits.begin(), logits.end());
    std::array<double, 3> probs{};
    cross_entropy3(l, 0, &probs);
    return probs;
}

} // namespace vsynth
