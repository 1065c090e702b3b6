#include <algorithm>

#include "forge/surgery.hpp"

namespace forge {

namespace {

bool is_vocab_tensor(const std::string& name) {
    return name.find("embed.tokens") != std::string::npos || name == "decoder.output_projection";
}

// Vocabulary side a tensor belongs to: encoder names follow the source
// language, decoder names the target language.
const std::string& side_fp(const Model& m, const std::string& name) {
    return name.rfind("encoder.", 0) == 0 ? m.src_vocab_fp : m.tgt_vocab_fp;
}

}  // namespace

GraftReport graft(Model& dst, const GraftPlan& plan) {
    for (size_t i = 0; i < plan.mappings.size(); ++i) {
        if (!plan.mappings[i].source) throw GraftError("graft mapping without source model");
        for (size_t j = i + 1; j < plan.mappings.size(); ++j) {
            const std::string &a = plan.mappings[i].dst_prefix, &b = plan.mappings[j].dst_prefix;
            if (a.rfind(b, 0) == 0 || b.rfind(a, 0) == 0)
                throw GraftError("overlapping destination prefixes: " + a + " / " + b);
        }
    }
    GraftReport report;
    Rng reinit_root(plan.reinit_seed);
    for (auto& [name, p] : dst.tree.named) {
        const GraftMapping* m = nullptr;
        for (const auto& cand : plan.mappings)
            if (name.rfind(cand.dst_prefix, 0) == 0) {
                m = &cand;
                break;
            }
        bool excluded =
            m && std::find(m->exclude.begin(), m->exclude.end(), name) != m->exclude.end();
        if (!m || excluded) {
            report.untouched.push_back(name);
            continue;
        }
        std::string src_name = m->src_prefix + name.substr(m->dst_prefix.size());
        if (!m->source->tree.has(src_name)) {
            if (plan.policy == GraftPlan::MissingPolicy::Error)
                throw GraftError("missing source tensor " + src_name + " for " + name);
            init_param_tensor(p->value, dst.config, name,
                              reinit_root.fork(fnv1a64(name.data(), name.size())));
            report.random_initialized.push_back(name);
            continue;
        }
        const Param<float>* src = m->source->tree.at(src_name);
        if (src->value.dims != p->value.dims)
            throw GraftError("shape mismatch grafting " + src_name + " -> " + name);
        if (is_vocab_tensor(name)) {
            const std::string& want = side_fp(dst, name);
            const std::string& have = side_fp(*m->source, src_name);
            if (want != have)
                throw GraftError("vocabulary fingerprint mismatch grafting " + src_name + " -> " +
                                 name);
        }
        p->value.v = src->value.v;
        report.grafted.push_back(name);
    }
    return report;
}

}  // namespace forge
