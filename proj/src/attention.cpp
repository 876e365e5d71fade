#include "pit/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pit {

LambdaParam::LambdaParam(double effective_init, LambdaMode m, std::string name) : mode(m) {
    if (effective_init < 0.0) throw std::invalid_argument("lambda must start non-negative");
    double r = 0.0;
    if (mode == LambdaMode::square) {
        r = std::sqrt(effective_init);
    } else {
        r = std::atan(effective_init);
        r = std::min(std::max(r, 0.0), kTanClampMax);
    }
    raw = Param(Tensor2::scalar(r), std::move(name));
}

Tape::NodeId LambdaParam::effective(Tape& t) {
    Tape::NodeId r = t.leaf(raw);
    if (mode == LambdaMode::square) return t.mul(r, r);
    return t.tan_elem(r);
}

double LambdaParam::effective_value() const {
    const double r = raw.value.data[0];
    return mode == LambdaMode::square ? r * r : std::tan(r);
}

void LambdaParam::clamp() {
    if (mode != LambdaMode::tan_constrained) return;
    double& r = raw.value.data[0];
    r = std::min(std::max(r, 0.0), kTanClampMax);
}

Tensor2 field_mask(const ReceptiveField& field, int cols) {
    const int rows = static_cast<int>(field.neighbors.size());
    Tensor2 mask(rows, cols, -std::numeric_limits<double>::infinity());
    for (int i = 0; i < rows; ++i)
        for (int j : field.neighbors[i]) mask.at(i, j) = 0.0;
    return mask;
}

Tape::NodeId position_weights(Tape& t, AttentionHead& head, const PairwiseDistances& d,
                              const ReceptiveField* field) {
    if (!head.lambda) throw std::invalid_argument("position attention needs a lambda parameter");
    Tape::NodeId neg_lambda = t.scale(head.lambda->effective(t), -1.0);
    Tape::NodeId scores = t.scalar_mul(t.constant(d.sq), neg_lambda);
    if (field) {
        if (static_cast<int>(field->neighbors.size()) != d.sq.rows)
            throw std::invalid_argument("receptive field does not match distance matrix");
        scores = t.add(scores, t.constant(field_mask(*field, d.sq.cols)));
    }
    return t.softmax_rows(scores);
}

Tape::NodeId apply_attention(Tape& t, Tape::NodeId weights, Tape::NodeId u, AttentionHead& head) {
    if (t.value(u).cols != head.w_v.value.rows)
        throw std::invalid_argument("attention: feature width must equal w_v rows");
    if (t.value(weights).cols != t.value(u).rows)
        throw std::invalid_argument("attention: weight columns must equal feature rows");
    return t.matmul(weights, t.matmul(u, t.leaf(head.w_v)));
}

Tape::NodeId pos_att(Tape& t, Tape::NodeId u, const PairwiseDistances& d, AttentionHead& head) {
    if (d.sq.rows != d.sq.cols) throw std::invalid_argument("pos_att: distance matrix must be square");
    return apply_attention(t, position_weights(t, head, d), u, head);
}

Tape::NodeId cro_pos_att(Tape& t, Tape::NodeId u, const PairwiseDistances& d_cross, AttentionHead& head) {
    return apply_attention(t, position_weights(t, head, d_cross), u, head);
}

Tape::NodeId loc_pos_att(Tape& t, Tape::NodeId u, const ReceptiveField& field, const PairwiseDistances& d,
                         AttentionHead& head) {
    for (const auto& nb : field.neighbors)
        if (nb.empty()) throw std::runtime_error("loc_pos_att: empty receptive field");
    return apply_attention(t, position_weights(t, head, d, &field), u, head);
}

namespace {

Tape::NodeId content_scores(Tape& t, Tape::NodeId u, AttentionHead& head) {
    if (!head.w_q || !head.w_k) throw std::invalid_argument("self attention needs w_q and w_k");
    Tape::NodeId q = t.matmul(u, t.leaf(*head.w_q));
    Tape::NodeId k = t.matmul(u, t.leaf(*head.w_k));
    const double inv = 1.0 / std::sqrt(static_cast<double>(head.w_q->value.cols));
    return t.scale(t.matmul(q, t.transpose(k)), inv);
}

}  // namespace

Tape::NodeId self_att(Tape& t, Tape::NodeId u, AttentionHead& head) {
    Tape::NodeId w = t.softmax_rows(content_scores(t, u, head));
    return apply_attention(t, w, u, head);
}

Tape::NodeId self_pos_att(Tape& t, Tape::NodeId u, const PairwiseDistances& d, AttentionHead& head) {
    if (d.sq.rows != d.sq.cols) throw std::invalid_argument("self_pos_att: distance matrix must be square");
    if (!head.lambda) throw std::invalid_argument("self_pos_att needs a lambda parameter");
    Tape::NodeId neg_lambda = t.scale(head.lambda->effective(t), -1.0);
    Tape::NodeId pos = t.scalar_mul(t.constant(d.sq), neg_lambda);
    Tape::NodeId w = t.softmax_rows(t.add(pos, content_scores(t, u, head)));
    return apply_attention(t, w, u, head);
}

Tape::NodeId multi_head(Tape& t, Tape::NodeId u, const AttentionContext& ctx, AttentionLayer& layer) {
    if (layer.heads.empty()) throw std::invalid_argument("multi_head: no heads");
    std::vector<Tape::NodeId> parts;
    parts.reserve(layer.heads.size());
    for (auto& head : layer.heads) {
        switch (layer.variant) {
            case AttentionVariant::posatt:
                parts.push_back(pos_att(t, u, *ctx.distances, head));
                break;
            case AttentionVariant::cro_posatt:
                parts.push_back(cro_pos_att(t, u, *ctx.distances, head));
                break;
            case AttentionVariant::loc_posatt:
                parts.push_back(loc_pos_att(t, u, *ctx.field, *ctx.distances, head));
                break;
            case AttentionVariant::selfatt:
                parts.push_back(self_att(t, u, head));
                break;
            case AttentionVariant::selfposatt:
                parts.push_back(self_pos_att(t, u, *ctx.distances, head));
                break;
        }
    }
    return parts.size() == 1 ? parts[0] : t.concat_cols(parts);
}

double interpretable_radius(const AttentionHead& head) {
    if (!head.lambda) throw std::invalid_argument("interpretable_radius: head has no lambda");
    const double eff = head.lambda->effective_value();
    if (eff == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / std::sqrt(eff);
}

}  // namespace pit
