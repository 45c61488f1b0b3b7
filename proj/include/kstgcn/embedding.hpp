#pragma once

// Knowledge representation learning over the CKG: translation-based relation
// scoring (with optional per-relation transfer matrices), attribute-value
// classification through a nonlinear projection, and joint softmax training.
// Produces the static and dynamic knowledge vectors consumed by the fusion
// cell.

#include "kstgcn/common.hpp"
#include "kstgcn/csv.hpp"
#include "kstgcn/triples.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace kstgcn {

enum class Scorer { transe, transr };
enum class NormChoice { l1, l2 };

inline std::string to_string(Scorer s) { return s == Scorer::transe ? "transe" : "transr"; }
inline std::string to_string(NormChoice n) { return n == NormChoice::l1 ? "l1" : "l2"; }

inline Scorer scorer_from_string(const std::string& s) {
    if (s == "transe") return Scorer::transe;
    if (s == "transr") return Scorer::transr;
    throw std::invalid_argument("unknown scorer: " + s);
}

inline NormChoice norm_from_string(const std::string& s) {
    if (s == "l1") return NormChoice::l1;
    if (s == "l2") return NormChoice::l2;
    throw std::invalid_argument("unknown norm: " + s);
}

inline double norm_value(const Vec& u, NormChoice norm) {
    return norm == NormChoice::l1 ? u.lpNorm<1>() : u.norm();
}

// Subgradient of the norm; zero where the norm is non-differentiable.
inline Vec norm_grad(const Vec& u, NormChoice norm) {
    if (norm == NormChoice::l1) return u.array().sign().matrix();
    double n = u.norm();
    if (n == 0.0) return Vec::Zero(u.size());
    return u / n;
}

// --- vector-level scores ---------------------------------------------------

inline double score_relation_transe(const Vec& h, const Vec& r, const Vec& t, NormChoice norm,
                                    double b1) {
    require(h.size() == r.size() && r.size() == t.size(),
            "score_relation_transe: dimension mismatch");
    return -norm_value(h + r - t, norm) + b1;
}

// Vectors are rows; the transfer matrix acts on the right (h M_r).
inline double score_relation_transr(const Vec& h, const Vec& r, const Vec& t, const Mat& m_r,
                                    NormChoice norm, double b1) {
    require(h.size() == r.size() && r.size() == t.size(),
            "score_relation_transr: dimension mismatch");
    require(m_r.rows() == h.size() && m_r.cols() == h.size(),
            "score_relation_transr: transfer matrix must be d x d");
    return -norm_value(m_r.transpose() * h + r - m_r.transpose() * t, norm) + b1;
}

inline Vec attribute_projection(const Vec& e, const Mat& w, const Vec& b) {
    require(w.rows() == e.size() && w.cols() == b.size(),
            "attribute_projection: shape mismatch");
    return ((w.transpose() * e + b).array().tanh()).matrix();
}

inline double score_attribute_vec(const Vec& e, const Mat& w, const Vec& b, const Vec& value_vec,
                                  NormChoice norm, double b2) {
    Vec a = attribute_projection(e, w, b);
    require(a.size() == value_vec.size(), "score_attribute_vec: value dimension mismatch");
    return -norm_value(a - value_vec, norm) + b2;
}

// --- embedding table -------------------------------------------------------

struct EmbeddingTable {
    int dim = 0;
    Scorer scorer = Scorer::transe;
    NormChoice norm = NormChoice::l1;
    double b1 = 7.0;
    double b2 = 7.0;
    uint64_t seed = 0;

    std::vector<std::string> entity_names;
    std::vector<std::string> relation_names;
    std::vector<std::string> attribute_names;
    std::vector<std::vector<std::string>> value_names;

    Mat entity_vecs;                  // |E| x d
    Mat relation_vecs;                // |Rel| x d
    std::vector<Mat> transfer_mats;   // per relation, d x d; empty for transe
    std::vector<Mat> attr_value_vecs; // per attribute, |range| x d
    std::vector<Mat> attr_proj_w;     // per attribute, d x d
    std::vector<Vec> attr_proj_b;     // per attribute, d

    int n_entities() const { return static_cast<int>(entity_vecs.rows()); }
    int n_relations() const { return static_cast<int>(relation_vecs.rows()); }
    int n_attributes() const { return static_cast<int>(attr_value_vecs.size()); }

    Vec entity_vec(int e) const { return entity_vecs.row(e).transpose(); }
    Vec relation_vec(int r) const { return relation_vecs.row(r).transpose(); }
    Vec value_vec(int a, int v) const { return attr_value_vecs[a].row(v).transpose(); }

    bool operator==(const EmbeddingTable& o) const {
        auto mats_eq = [](const std::vector<Mat>& x, const std::vector<Mat>& y) {
            if (x.size() != y.size()) return false;
            for (size_t i = 0; i < x.size(); ++i)
                if (x[i].rows() != y[i].rows() || x[i].cols() != y[i].cols() || x[i] != y[i])
                    return false;
            return true;
        };
        auto vecs_eq = [](const std::vector<Vec>& x, const std::vector<Vec>& y) {
            if (x.size() != y.size()) return false;
            for (size_t i = 0; i < x.size(); ++i)
                if (x[i].size() != y[i].size() || x[i] != y[i]) return false;
            return true;
        };
        return dim == o.dim && scorer == o.scorer && norm == o.norm && b1 == o.b1 && b2 == o.b2 &&
               seed == o.seed && entity_names == o.entity_names &&
               relation_names == o.relation_names && attribute_names == o.attribute_names &&
               value_names == o.value_names && entity_vecs == o.entity_vecs &&
               relation_vecs == o.relation_vecs && mats_eq(transfer_mats, o.transfer_mats) &&
               mats_eq(attr_value_vecs, o.attr_value_vecs) &&
               mats_eq(attr_proj_w, o.attr_proj_w) && vecs_eq(attr_proj_b, o.attr_proj_b);
    }
};

struct KrearConfig {
    int dim = 20;
    Scorer scorer = Scorer::transe;
    NormChoice norm = NormChoice::l1;
    int negatives = 10;  // sampled head corruptions per relation triple
    int epochs = 100;
    int batch = 32;
    double lr = 0.05;
    double b1 = 7.0;
    double b2 = 7.0;
    uint64_t seed = 1;
    double cooc_reg_weight = 0.0;  // experimental, off by default
};

inline EmbeddingTable init_embedding_table(const TripleStore& store, const KrearConfig& config,
                                           Rng& rng) {
    require(config.dim > 0, "embedding dim must be positive");
    EmbeddingTable t;
    t.dim = config.dim;
    t.scorer = config.scorer;
    t.norm = config.norm;
    t.b1 = config.b1;
    t.b2 = config.b2;
    t.seed = config.seed;
    for (int e = 0; e < store.n_entities(); ++e) t.entity_names.push_back(store.entity_name(e));
    for (int r = 0; r < store.n_relations(); ++r)
        t.relation_names.push_back(store.relation_name(r));
    for (int a = 0; a < store.n_attributes(); ++a) {
        t.attribute_names.push_back(store.attribute_name(a));
        std::vector<std::string> values;
        for (int v = 0; v < store.range_size(a); ++v) values.push_back(store.value_name(a, v));
        t.value_names.push_back(std::move(values));
    }

    const double bound = 6.0 / std::sqrt(static_cast<double>(config.dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto fill = [&](Mat& m, int rows) {
        m.resize(rows, config.dim);
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
    };
    fill(t.entity_vecs, store.n_entities());
    fill(t.relation_vecs, store.n_relations());
    if (config.scorer == Scorer::transr)
        t.transfer_mats.assign(store.n_relations(), Mat::Identity(config.dim, config.dim));
    for (int a = 0; a < store.n_attributes(); ++a) {
        Mat values;
        fill(values, store.range_size(a));
        t.attr_value_vecs.push_back(std::move(values));
        t.attr_proj_w.push_back(Mat::Identity(config.dim, config.dim));
        t.attr_proj_b.push_back(Vec::Zero(config.dim));
    }
    return t;
}

// --- table-indexed scores --------------------------------------------------

inline double score_relation(const EmbeddingTable& t, const RelationTriple& triple) {
    Vec h = t.entity_vec(triple.head);
    Vec r = t.relation_vec(triple.relation);
    Vec tl = t.entity_vec(triple.tail);
    if (t.scorer == Scorer::transr)
        return score_relation_transr(h, r, tl, t.transfer_mats[triple.relation], t.norm, t.b1);
    return score_relation_transe(h, r, tl, t.norm, t.b1);
}

inline double score_attribute(const EmbeddingTable& t, int entity, int attribute, int value) {
    require(attribute >= 0 && attribute < t.n_attributes(),
            "score_attribute: attribute id out of range");
    require(value >= 0 && value < t.attr_value_vecs[attribute].rows(),
            "score_attribute: unknown value id");
    return score_attribute_vec(t.entity_vec(entity), t.attr_proj_w[attribute],
                               t.attr_proj_b[attribute], t.value_vec(attribute, value), t.norm,
                               t.b2);
}

// Log softmax of the true triple against itself plus head-corrupted negatives.
inline double relation_log_prob(const EmbeddingTable& t, const RelationTriple& triple,
                                const std::vector<RelationTriple>& negatives) {
    require(!negatives.empty(), "relation_log_prob: negatives must be nonempty");
    Vec scores(negatives.size() + 1);
    scores(0) = score_relation(t, triple);
    for (size_t i = 0; i < negatives.size(); ++i) {
        require(negatives[i].relation == triple.relation && negatives[i].tail == triple.tail,
                "relation_log_prob: negatives must share relation and tail");
        scores(static_cast<int>(i) + 1) = score_relation(t, negatives[i]);
    }
    return scores(0) - log_sum_exp(scores);
}

// Log softmax of the true value over the attribute's full declared range.
inline double attribute_log_prob(const EmbeddingTable& t, const AttributeTriple& triple) {
    const int range = static_cast<int>(t.attr_value_vecs[triple.attribute].rows());
    Vec scores(range);
    for (int v = 0; v < range; ++v)
        scores(v) = score_attribute(t, triple.entity, triple.attribute, v);
    return scores(triple.value) - log_sum_exp(scores);
}

// --- analytic gradients ----------------------------------------------------

struct EmbeddingGrad {
    Mat entity_vecs;
    Mat relation_vecs;
    std::vector<Mat> transfer_mats;
    std::vector<Mat> attr_value_vecs;
    std::vector<Mat> attr_proj_w;
    std::vector<Vec> attr_proj_b;

    static EmbeddingGrad zeros_like(const EmbeddingTable& t) {
        EmbeddingGrad g;
        g.entity_vecs = Mat::Zero(t.entity_vecs.rows(), t.entity_vecs.cols());
        g.relation_vecs = Mat::Zero(t.relation_vecs.rows(), t.relation_vecs.cols());
        for (const auto& m : t.transfer_mats) g.transfer_mats.push_back(Mat::Zero(m.rows(), m.cols()));
        for (const auto& m : t.attr_value_vecs)
            g.attr_value_vecs.push_back(Mat::Zero(m.rows(), m.cols()));
        for (const auto& m : t.attr_proj_w) g.attr_proj_w.push_back(Mat::Zero(m.rows(), m.cols()));
        for (const auto& v : t.attr_proj_b) g.attr_proj_b.push_back(Vec::Zero(v.size()));
        return g;
    }

    void set_zero() {
        entity_vecs.setZero();
        relation_vecs.setZero();
        for (auto& m : transfer_mats) m.setZero();
        for (auto& m : attr_value_vecs) m.setZero();
        for (auto& m : attr_proj_w) m.setZero();
        for (auto& v : attr_proj_b) v.setZero();
    }
};

// Adds d(log_prob)/d(parameters) into grad and returns the log probability.
inline double relation_log_prob_grad(const EmbeddingTable& t, const RelationTriple& triple,
                                     const std::vector<RelationTriple>& negatives,
                                     EmbeddingGrad& grad) {
    require(!negatives.empty(), "relation_log_prob_grad: negatives must be nonempty");
    const int k = static_cast<int>(negatives.size());
    std::vector<RelationTriple> cand;
    cand.reserve(k + 1);
    cand.push_back(triple);
    for (const auto& n : negatives) {
        require(n.relation == triple.relation && n.tail == triple.tail,
                "relation_log_prob_grad: negatives must share relation and tail");
        cand.push_back(n);
    }
    Vec scores(k + 1);
    for (int i = 0; i <= k; ++i) scores(i) = score_relation(t, cand[i]);
    const double lse = log_sum_exp(scores);
    Vec p = (scores.array() - lse).exp().matrix();

    const int rel = triple.relation;
    const Vec r = t.relation_vec(rel);
    const Vec tail = t.entity_vec(triple.tail);
    const bool transr = t.scorer == Scorer::transr;
    const Mat* m = transr ? &t.transfer_mats[rel] : nullptr;
    for (int i = 0; i <= k; ++i) {
        const double coef = (i == 0 ? 1.0 : 0.0) - p(i);
        if (coef == 0.0) continue;
        const Vec h = t.entity_vec(cand[i].head);
        if (transr) {
            Vec u = m->transpose() * h + r - m->transpose() * tail;
            Vec gu = -coef * norm_grad(u, t.norm);  // d(score)/du = -norm_grad
            grad.entity_vecs.row(cand[i].head) += ((*m) * gu).transpose();
            grad.entity_vecs.row(triple.tail) -= ((*m) * gu).transpose();
            grad.relation_vecs.row(rel) += gu.transpose();
            grad.transfer_mats[rel] += (h - tail) * gu.transpose();
        } else {
            Vec u = h + r - tail;
            Vec gu = -coef * norm_grad(u, t.norm);
            grad.entity_vecs.row(cand[i].head) += gu.transpose();
            grad.entity_vecs.row(triple.tail) -= gu.transpose();
            grad.relation_vecs.row(rel) += gu.transpose();
        }
    }
    return scores(0) - lse;
}

inline double attribute_log_prob_grad(const EmbeddingTable& t, const AttributeTriple& triple,
                                      EmbeddingGrad& grad) {
    const int a = triple.attribute;
    const int range = static_cast<int>(t.attr_value_vecs[a].rows());
    const Vec e = t.entity_vec(triple.entity);
    const Mat& w = t.attr_proj_w[a];
    const Vec act = attribute_projection(e, w, t.attr_proj_b[a]);

    Vec scores(range);
    for (int v = 0; v < range; ++v) {
        Vec u = act - t.value_vec(a, v);
        scores(v) = -norm_value(u, t.norm) + t.b2;
    }
    const double lse = log_sum_exp(scores);
    Vec p = (scores.array() - lse).exp().matrix();

    Vec g_act = Vec::Zero(t.dim);
    for (int v = 0; v < range; ++v) {
        const double coef = (v == triple.value ? 1.0 : 0.0) - p(v);
        if (coef == 0.0) continue;
        Vec u = act - t.value_vec(a, v);
        Vec gu = -coef * norm_grad(u, t.norm);
        grad.attr_value_vecs[a].row(v) -= gu.transpose();
        g_act += gu;
    }
    Vec g_z = (g_act.array() * (1.0 - act.array().square())).matrix();
    grad.attr_proj_b[a] += g_z;
    grad.attr_proj_w[a] += e * g_z.transpose();
    grad.entity_vecs.row(triple.entity) += (w * g_z).transpose();
    return scores(triple.value) - lse;
}

// --- training --------------------------------------------------------------

namespace detail {

inline void normalize_rows(Mat& m) {
    for (int i = 0; i < m.rows(); ++i) {
        double n = m.row(i).norm();
        if (n > 0.0) m.row(i) /= n;
    }
}

inline void apply_ascent(EmbeddingTable& t, const EmbeddingGrad& g, double step) {
    t.entity_vecs += step * g.entity_vecs;
    t.relation_vecs += step * g.relation_vecs;
    for (size_t i = 0; i < t.transfer_mats.size(); ++i)
        t.transfer_mats[i] += step * g.transfer_mats[i];
    for (size_t i = 0; i < t.attr_value_vecs.size(); ++i)
        t.attr_value_vecs[i] += step * g.attr_value_vecs[i];
    for (size_t i = 0; i < t.attr_proj_w.size(); ++i) t.attr_proj_w[i] += step * g.attr_proj_w[i];
    for (size_t i = 0; i < t.attr_proj_b.size(); ++i) t.attr_proj_b[i] += step * g.attr_proj_b[i];
}

// Pulls mean value embeddings of frequently co-present attributes together;
// gradient descent step on cooc_reg_weight * p * ||mean(E_a) - mean(E_b)||^2.
inline void cooc_regularizer_step(EmbeddingTable& t, const TripleStore& store, double weight,
                                  double lr) {
    for (const auto& c : store.cooccurrence()) {
        Mat& ea = t.attr_value_vecs[c.attr_a];
        Mat& eb = t.attr_value_vecs[c.attr_b];
        if (ea.rows() == 0 || eb.rows() == 0) continue;
        Vec diff = (ea.colwise().mean() - eb.colwise().mean()).transpose();
        Vec step = 2.0 * weight * c.probability * diff;
        ea.rowwise() -= (lr * step / ea.rows()).transpose();
        eb.rowwise() += (lr * step / eb.rows()).transpose();
    }
}

}  // namespace detail

// Mini-batch gradient ascent on the joint log likelihood of relation and
// attribute triples. Deterministic for a fixed seed.
inline EmbeddingTable train_krear(const TripleStore& store, const KrearConfig& config,
                                  std::vector<double>* loss_history = nullptr) {
    require(!store.relations().empty(), "train_krear: no relation triples");
    require(!store.attributes().empty(), "train_krear: no attribute triples");
    require(config.negatives > 0, "train_krear: negatives must be positive");
    require(config.batch > 0, "train_krear: batch must be positive");
    require(config.epochs >= 0, "train_krear: epochs must be nonnegative");

    Rng rng(config.seed);
    EmbeddingTable table = init_embedding_table(store, config, rng);
    if (loss_history) loss_history->clear();

    // item = (is_attribute, index into the respective triple list)
    std::vector<std::pair<bool, int>> items;
    for (size_t i = 0; i < store.relations().size(); ++i) items.push_back({false, (int)i});
    for (size_t i = 0; i < store.attributes().size(); ++i) items.push_back({true, (int)i});

    EmbeddingGrad grad = EmbeddingGrad::zeros_like(table);
    std::vector<RelationTriple> negatives;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        detail::normalize_rows(table.entity_vecs);
        detail::normalize_rows(table.relation_vecs);
        std::shuffle(items.begin(), items.end(), rng);

        double epoch_loss = 0.0;
        int in_batch = 0;
        for (const auto& [is_attribute, idx] : items) {
            if (is_attribute) {
                epoch_loss -= attribute_log_prob_grad(table, store.attributes()[idx], grad);
            } else {
                const RelationTriple& t = store.relations()[idx];
                negatives.clear();
                for (int k = 0; k < config.negatives; ++k)
                    negatives.push_back(negative_sample_relation(t, store, rng));
                epoch_loss -= relation_log_prob_grad(table, t, negatives, grad);
            }
            if (++in_batch == config.batch) {
                detail::apply_ascent(table, grad, config.lr / in_batch);
                grad.set_zero();
                in_batch = 0;
            }
        }
        if (in_batch > 0) {
            detail::apply_ascent(table, grad, config.lr / in_batch);
            grad.set_zero();
        }
        if (config.cooc_reg_weight > 0.0)
            detail::cooc_regularizer_step(table, store, config.cooc_reg_weight, config.lr);

        epoch_loss /= static_cast<double>(items.size());
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_krear: loss diverged at epoch " +
                                     std::to_string(epoch));
        if (loss_history) loss_history->push_back(epoch_loss);
    }
    return table;
}

// --- evaluation ------------------------------------------------------------

// Rank of the true tail among all same-kind candidate tails, averaged over
// relation triples. Ties contribute half a place.
inline double mean_tail_rank(const EmbeddingTable& table, const TripleStore& store) {
    require(!store.relations().empty(), "mean_tail_rank: no relation triples");
    double total = 0.0;
    for (const auto& t : store.relations()) {
        const auto candidates = store.entities_of_kind(store.entity_kind(t.tail));
        const double true_score = score_relation(table, t);
        int better = 0, ties = 0;
        for (int c : candidates) {
            if (c == t.tail) continue;
            double s = score_relation(table, {t.head, t.relation, c});
            if (s > true_score) ++better;
            else if (s == true_score) ++ties;
        }
        total += 1.0 + better + 0.5 * ties;
    }
    return total / static_cast<double>(store.relations().size());
}

// Fraction of attribute triples whose true value maximizes the score.
inline double attribute_accuracy(const EmbeddingTable& table, const TripleStore& store) {
    require(!store.attributes().empty(), "attribute_accuracy: no attribute triples");
    int correct = 0;
    for (const auto& t : store.attributes()) {
        const int range = static_cast<int>(table.attr_value_vecs[t.attribute].rows());
        int best = 0;
        double best_score = score_attribute(table, t.entity, t.attribute, 0);
        for (int v = 1; v < range; ++v) {
            double s = score_attribute(table, t.entity, t.attribute, v);
            if (s > best_score) {
                best_score = s;
                best = v;
            }
        }
        if (best == t.value) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(store.attributes().size());
}

// --- knowledge vector extraction ------------------------------------------

struct KnowledgeVectors {
    Mat e_s;  // n_sections x d_s, row per road section
    Mat e_d;  // n_steps x d_d, row per time step, shared across sections
};

namespace detail {

// Attributes acting as categorical descriptors for a kind: carried by at
// least one entity of the kind and never twice by the same entity.
// Multi-valued linkage attributes fail the second test.
inline std::vector<int> descriptor_attributes(const TripleStore& store, EntityKind kind) {
    const int n_attr = store.n_attributes();
    std::vector<int> hits(n_attr, 0);
    std::vector<char> multi(n_attr, 0);
    std::unordered_map<long long, int> per_entity;
    for (const auto& t : store.attributes()) {
        if (store.entity_kind(t.entity) != kind) continue;
        ++hits[t.attribute];
        long long key = static_cast<long long>(t.attribute) * store.n_entities() + t.entity;
        if (++per_entity[key] > 1) multi[t.attribute] = 1;
    }
    std::vector<int> out;
    for (int a = 0; a < n_attr; ++a)
        if (hits[a] > 0 && !multi[a]) out.push_back(a);
    return out;
}

}  // namespace detail

// An entity's knowledge vector concatenates the trained value embeddings of
// its descriptor attributes (zeros where a triple is absent). Sections
// prepend their entity vector; moments use value blocks only, so e_d depends
// on a step's semantics rather than its index and generalizes to steps the
// embedding never saw.
inline KnowledgeVectors extract_knowledge_vectors(const EmbeddingTable& table,
                                                  const TripleStore& store,
                                                  const std::vector<std::string>& time_index) {
    KnowledgeVectors kv;
    const auto sections = store.entities_of_kind(EntityKind::section);
    require(!sections.empty(), "extract_knowledge_vectors: no section entities");
    const int d = table.dim;

    std::unordered_map<long long, int> value_of;
    for (const auto& t : store.attributes())
        value_of[static_cast<long long>(t.attribute) * store.n_entities() + t.entity] = t.value;
    auto fill_blocks = [&](Mat& m, int row, int first_col, int entity,
                           const std::vector<int>& attrs) {
        for (size_t k = 0; k < attrs.size(); ++k) {
            auto it = value_of.find(static_cast<long long>(attrs[k]) * store.n_entities() +
                                    entity);
            if (it != value_of.end())
                m.block(row, first_col + static_cast<int>(k) * d, 1, d) =
                    table.attr_value_vecs[attrs[k]].row(it->second);
        }
    };

    const auto attrs_s = detail::descriptor_attributes(store, EntityKind::section);
    kv.e_s = Mat::Zero(static_cast<int>(sections.size()),
                       d * (1 + static_cast<int>(attrs_s.size())));
    for (size_t i = 0; i < sections.size(); ++i) {
        const int row = static_cast<int>(i);
        kv.e_s.block(row, 0, 1, d) = table.entity_vecs.row(sections[i]);
        fill_blocks(kv.e_s, row, d, sections[i], attrs_s);
    }

    const auto attrs_d = detail::descriptor_attributes(store, EntityKind::moment);
    require(time_index.empty() || !attrs_d.empty(),
            "extract_knowledge_vectors: moments carry no single-valued attributes");
    kv.e_d = Mat::Zero(static_cast<int>(time_index.size()),
                       d * std::max<int>(1, static_cast<int>(attrs_d.size())));
    for (size_t ti = 0; ti < time_index.size(); ++ti) {
        const int ent = store.find_entity(time_index[ti]);
        require(ent >= 0, "extract_knowledge_vectors: unknown time id '" + time_index[ti] + "'");
        require(store.entity_kind(ent) == EntityKind::moment,
                "extract_knowledge_vectors: time id '" + time_index[ti] +
                    "' is not a moment entity");
        fill_blocks(kv.e_d, static_cast<int>(ti), 0, ent, attrs_d);
    }
    return kv;
}

// --- serialization ---------------------------------------------------------

inline void save_embedding_table(const EmbeddingTable& t, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto vec_cells = [&](auto&& row_expr, std::vector<std::string>& cells) {
        for (int j = 0; j < row_expr.size(); ++j)
            cells.push_back(csv::format_double(row_expr(j)));
    };
    auto dim_header = [&](std::vector<std::string> prefix) {
        for (int j = 0; j < t.dim; ++j) prefix.push_back("v" + std::to_string(j));
        return prefix;
    };

    {
        csv::Writer w(dir + "/entities.csv");
        w.row(dim_header({"entity"}));
        for (int e = 0; e < t.n_entities(); ++e) {
            std::vector<std::string> cells{t.entity_names[e]};
            vec_cells(t.entity_vecs.row(e), cells);
            w.row(cells);
        }
    }
    {
        csv::Writer w(dir + "/relations.csv");
        w.row(dim_header({"relation"}));
        for (int r = 0; r < t.n_relations(); ++r) {
            std::vector<std::string> cells{t.relation_names[r]};
            vec_cells(t.relation_vecs.row(r), cells);
            w.row(cells);
        }
    }
    {
        csv::Writer w(dir + "/attr_values.csv");
        w.row(dim_header({"attribute", "value"}));
        for (int a = 0; a < t.n_attributes(); ++a)
            for (int v = 0; v < t.attr_value_vecs[a].rows(); ++v) {
                std::vector<std::string> cells{t.attribute_names[a], t.value_names[a][v]};
                vec_cells(t.attr_value_vecs[a].row(v), cells);
                w.row(cells);
            }
    }
    {
        // projection weights row by row, bias as part "b"
        csv::Writer w(dir + "/attr_proj.csv");
        w.row(dim_header({"attribute", "part"}));
        for (int a = 0; a < t.n_attributes(); ++a) {
            for (int i = 0; i < t.dim; ++i) {
                std::vector<std::string> cells{t.attribute_names[a], "w" + std::to_string(i)};
                vec_cells(t.attr_proj_w[a].row(i), cells);
                w.row(cells);
            }
            std::vector<std::string> cells{t.attribute_names[a], "b"};
            vec_cells(t.attr_proj_b[a].transpose(), cells);
            w.row(cells);
        }
    }
    if (t.scorer == Scorer::transr) {
        csv::Writer w(dir + "/transfer.csv");
        w.row(dim_header({"relation", "row"}));
        for (int r = 0; r < t.n_relations(); ++r)
            for (int i = 0; i < t.dim; ++i) {
                std::vector<std::string> cells{t.relation_names[r], std::to_string(i)};
                vec_cells(t.transfer_mats[r].row(i), cells);
                w.row(cells);
            }
    }
    nlohmann::json meta = {{"dim", t.dim},
                           {"scorer", to_string(t.scorer)},
                           {"norm", to_string(t.norm)},
                           {"b1", t.b1},
                           {"b2", t.b2},
                           {"seed", t.seed}};
    std::ofstream out(dir + "/meta.json");
    out << meta.dump(2) << "\n";
}

inline EmbeddingTable load_embedding_table(const std::string& dir) {
    EmbeddingTable t;
    {
        std::ifstream in(dir + "/meta.json");
        if (!in) throw std::runtime_error(dir + "/meta.json: cannot open");
        nlohmann::json meta;
        try {
            in >> meta;
        } catch (const std::exception& e) {
            throw std::runtime_error(dir + "/meta.json: " + e.what());
        }
        t.dim = meta.at("dim").get<int>();
        t.scorer = scorer_from_string(meta.at("scorer").get<std::string>());
        t.norm = norm_from_string(meta.at("norm").get<std::string>());
        t.b1 = meta.at("b1").get<double>();
        t.b2 = meta.at("b2").get<double>();
        t.seed = meta.at("seed").get<uint64_t>();
    }
    auto parse_row_vec = [&](const std::vector<std::string>& row, size_t from,
                             const std::string& path, int line) {
        if (row.size() != from + static_cast<size_t>(t.dim))
            throw std::runtime_error(path + " line " + std::to_string(line) +
                                     ": expected " + std::to_string(t.dim) + " components");
        Vec v(t.dim);
        for (int j = 0; j < t.dim; ++j) v(j) = csv::parse_double(row[from + j], path);
        return v;
    };

    {
        const std::string path = dir + "/entities.csv";
        csv::Table tab = csv::read_file(path);
        t.entity_vecs.resize(static_cast<int>(tab.rows.size()), t.dim);
        for (size_t i = 0; i < tab.rows.size(); ++i) {
            t.entity_names.push_back(tab.rows[i][0]);
            t.entity_vecs.row(static_cast<int>(i)) =
                parse_row_vec(tab.rows[i], 1, path, tab.line_numbers[i]).transpose();
        }
    }
    {
        const std::string path = dir + "/relations.csv";
        csv::Table tab = csv::read_file(path);
        t.relation_vecs.resize(static_cast<int>(tab.rows.size()), t.dim);
        for (size_t i = 0; i < tab.rows.size(); ++i) {
            t.relation_names.push_back(tab.rows[i][0]);
            t.relation_vecs.row(static_cast<int>(i)) =
                parse_row_vec(tab.rows[i], 1, path, tab.line_numbers[i]).transpose();
        }
    }
    {
        const std::string path = dir + "/attr_values.csv";
        csv::Table tab = csv::read_file(path);
        for (size_t i = 0; i < tab.rows.size(); ++i) {
            const auto& row = tab.rows[i];
            if (row.size() < 2)
                throw std::runtime_error(path + " line " + std::to_string(tab.line_numbers[i]) +
                                         ": expected attribute,value,components");
            const std::string& attr = row[0];
            if (t.attribute_names.empty() || t.attribute_names.back() != attr) {
                t.attribute_names.push_back(attr);
                t.value_names.emplace_back();
                t.attr_value_vecs.emplace_back(0, t.dim);
            }
            Vec v = parse_row_vec(row, 2, path, tab.line_numbers[i]);
            Mat& m = t.attr_value_vecs.back();
            m.conservativeResize(m.rows() + 1, t.dim);
            m.row(m.rows() - 1) = v.transpose();
            t.value_names.back().push_back(row[1]);
        }
    }
    {
        const std::string path = dir + "/attr_proj.csv";
        csv::Table tab = csv::read_file(path);
        t.attr_proj_w.assign(t.attribute_names.size(), Mat::Zero(t.dim, t.dim));
        t.attr_proj_b.assign(t.attribute_names.size(), Vec::Zero(t.dim));
        for (size_t i = 0; i < tab.rows.size(); ++i) {
            const auto& row = tab.rows[i];
            const int line = tab.line_numbers[i];
            if (row.size() < 2)
                throw std::runtime_error(path + " line " + std::to_string(line) +
                                         ": expected attribute,part,components");
            auto it = std::find(t.attribute_names.begin(), t.attribute_names.end(), row[0]);
            if (it == t.attribute_names.end())
                throw std::runtime_error(path + " line " + std::to_string(line) +
                                         ": unknown attribute " + row[0]);
            const int a = static_cast<int>(it - t.attribute_names.begin());
            Vec v = parse_row_vec(row, 2, path, line);
            if (row[1] == "b") {
                t.attr_proj_b[a] = v;
            } else if (row[1].size() > 1 && row[1][0] == 'w') {
                const int r = static_cast<int>(csv::parse_long(row[1].substr(1), path));
                if (r < 0 || r >= t.dim)
                    throw std::runtime_error(path + " line " + std::to_string(line) +
                                             ": weight row out of range");
                t.attr_proj_w[a].row(r) = v.transpose();
            } else {
                throw std::runtime_error(path + " line " + std::to_string(line) +
                                         ": unknown part " + row[1]);
            }
        }
    }
    if (t.scorer == Scorer::transr) {
        const std::string path = dir + "/transfer.csv";
        csv::Table tab = csv::read_file(path);
        t.transfer_mats.assign(t.relation_names.size(), Mat::Zero(t.dim, t.dim));
        for (size_t i = 0; i < tab.rows.size(); ++i) {
            const auto& row = tab.rows[i];
            const int line = tab.line_numbers[i];
            auto it = std::find(t.relation_names.begin(), t.relation_names.end(), row[0]);
            if (it == t.relation_names.end())
                throw std::runtime_error(path + " line " + std::to_string(line) +
                                         ": unknown relation " + row[0]);
            const int r = static_cast<int>(it - t.relation_names.begin());
            const int ri = static_cast<int>(csv::parse_long(row[1], path));
            if (ri < 0 || ri >= t.dim)
                throw std::runtime_error(path + " line " + std::to_string(line) +
                                         ": row index out of range");
            t.transfer_mats[r].row(ri) = parse_row_vec(row, 2, path, line).transpose();
        }
    }
    return t;
}

}  // namespace kstgcn
