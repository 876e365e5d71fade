#include "pit/tape.hpp"

#include <cmath>
#include <limits>

namespace pit {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

void check_finite_values(const Tensor2& t, const char* op) {
    if (!t.all_finite()) throw std::runtime_error(std::string(op) + ": non-finite entries");
}

}  // namespace

void mm_nn(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
    if (!accumulate) out.fill(0.0);
    const int n = a.rows, k = a.cols, m = b.cols;
    for (int i = 0; i < n; ++i) {
        const double* arow = &a.data[static_cast<size_t>(i) * k];
        double* orow = &out.data[static_cast<size_t>(i) * m];
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = &b.data[static_cast<size_t>(p) * m];
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

void mm_nt(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
    // out(i,j) += sum_k a(i,k) b(j,k)
    if (!accumulate) out.fill(0.0);
    const int n = a.rows, k = a.cols, m = b.rows;
    for (int i = 0; i < n; ++i) {
        const double* arow = &a.data[static_cast<size_t>(i) * k];
        double* orow = &out.data[static_cast<size_t>(i) * m];
        for (int j = 0; j < m; ++j) {
            const double* brow = &b.data[static_cast<size_t>(j) * k];
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            orow[j] += s;
        }
    }
}

void mm_tn(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
    // out(i,j) += sum_k a(k,i) b(k,j)
    if (!accumulate) out.fill(0.0);
    const int n = a.cols, k = a.rows, m = b.cols;
    for (int p = 0; p < k; ++p) {
        const double* arow = &a.data[static_cast<size_t>(p) * n];
        const double* brow = &b.data[static_cast<size_t>(p) * m];
        for (int i = 0; i < n; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = &out.data[static_cast<size_t>(i) * m];
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

Tape::NodeId Tape::push(Tensor2 value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && track_;
    if (n.requires_grad) n.grad = Tensor2(n.value.rows, n.value.cols, 0.0);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

const Tensor2& Tape::grad(NodeId id) const {
    if (!nodes_[id].requires_grad) throw std::invalid_argument("Tape::grad: node does not track gradients");
    return nodes_[id].grad;
}

Tape::NodeId Tape::constant(Tensor2 v) {
    return push(std::move(v), false);
}

Tape::NodeId Tape::leaf(Param& p) {
    auto it = leaf_ids_.find(&p);
    if (it != leaf_ids_.end()) return it->second;
    check_finite_values(p.value, "Tape::leaf");
    NodeId id = push(p.value, p.trainable);
    nodes_[id].param = p.trainable ? &p : nullptr;
    leaf_ids_.emplace(&p, id);
    return id;
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor2& av = nodes_[a].value;
    const Tensor2& bv = nodes_[b].value;
    if (av.cols != bv.rows) throw std::invalid_argument("matmul: inner dimensions disagree");
    Tensor2 out(av.rows, bv.cols);
    mm_nn(av, bv, out, true);
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, b, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.nodes_[a].requires_grad) mm_nt(g, t.nodes_[b].value, t.grad_mut(a), true);
            if (t.nodes_[b].requires_grad) mm_tn(t.nodes_[a].value, g, t.grad_mut(b), true);
        };
    }
    return id;
}

Tape::NodeId Tape::transpose(NodeId a) {
    const Tensor2& av = nodes_[a].value;
    Tensor2 out(av.cols, av.rows);
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j) out.at(j, i) = av.at(i, j);
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            Tensor2& ga = t.grad_mut(a);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
        };
    }
    return id;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor2& av = nodes_[a].value;
    const Tensor2& bv = nodes_[b].value;
    if (!av.same_shape(bv)) throw std::invalid_argument("add: shape mismatch");
    Tensor2 out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, b, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.nodes_[a].requires_grad) {
                Tensor2& ga = t.grad_mut(a);
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
            }
            if (t.nodes_[b].requires_grad) {
                Tensor2& gb = t.grad_mut(b);
                for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i];
            }
        };
    }
    return id;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor2& av = nodes_[a].value;
    const Tensor2& bv = nodes_[b].value;
    if (!av.same_shape(bv)) throw std::invalid_argument("sub: shape mismatch");
    Tensor2 out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, b, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.nodes_[a].requires_grad) {
                Tensor2& ga = t.grad_mut(a);
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
            }
            if (t.nodes_[b].requires_grad) {
                Tensor2& gb = t.grad_mut(b);
                for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] -= g.data[i];
            }
        };
    }
    return id;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor2& av = nodes_[a].value;
    const Tensor2& bv = nodes_[b].value;
    if (!av.same_shape(bv)) throw std::invalid_argument("mul: shape mismatch");
    Tensor2 out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, b, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.nodes_[a].requires_grad) {
                Tensor2& ga = t.grad_mut(a);
                const Tensor2& bvv = t.nodes_[b].value;
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * bvv.data[i];
            }
            if (t.nodes_[b].requires_grad) {
                Tensor2& gb = t.grad_mut(b);
                const Tensor2& avv = t.nodes_[a].value;
                for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i] * avv.data[i];
            }
        };
    }
    return id;
}

Tape::NodeId Tape::div(NodeId a, NodeId b) {
    const Tensor2& av = nodes_[a].value;
    const Tensor2& bv = nodes_[b].value;
    if (!av.same_shape(bv)) throw std::invalid_argument("div: shape mismatch");
    Tensor2 out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] /= bv.data[i];
    check_finite_values(out, "div");
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, b, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& avv = t.nodes_[a].value;
            const Tensor2& bvv = t.nodes_[b].value;
            if (t.nodes_[a].requires_grad) {
                Tensor2& ga = t.grad_mut(a);
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] / bvv.data[i];
            }
            if (t.nodes_[b].requires_grad) {
                Tensor2& gb = t.grad_mut(b);
                for (size_t i = 0; i < g.data.size(); ++i)
                    gb.data[i] -= g.data[i] * avv.data[i] / (bvv.data[i] * bvv.data[i]);
            }
        };
    }
    return id;
}

Tape::NodeId Tape::add_rowvec(NodeId m, NodeId bias) {
    const Tensor2& mv = nodes_[m].value;
    const Tensor2& bv = nodes_[bias].value;
    if (bv.rows != 1 || bv.cols != mv.cols) throw std::invalid_argument("add_rowvec: bias must be 1 x cols");
    Tensor2 out = mv;
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out.at(i, j) += bv.at(0, j);
    bool rg = nodes_[m].requires_grad || nodes_[bias].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [m, bias, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.nodes_[m].requires_grad) {
                Tensor2& gm = t.grad_mut(m);
                for (size_t i = 0; i < g.data.size(); ++i) gm.data[i] += g.data[i];
            }
            if (t.nodes_[bias].requires_grad) {
                Tensor2& gb = t.grad_mut(bias);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) gb.at(0, j) += g.at(i, j);
            }
        };
    }
    return id;
}

Tape::NodeId Tape::scale(NodeId a, double c) {
    Tensor2 out = nodes_[a].value;
    for (double& v : out.data) v *= c;
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, c, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            Tensor2& ga = t.grad_mut(a);
            for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
        };
    }
    return id;
}

Tape::NodeId Tape::scalar_mul(NodeId m, NodeId s) {
    const Tensor2& sv = nodes_[s].value;
    if (sv.rows != 1 || sv.cols != 1) throw std::invalid_argument("scalar_mul: scalar must be 1x1");
    const double c = sv.data[0];
    Tensor2 out = nodes_[m].value;
    for (double& v : out.data) v *= c;
    bool rg = nodes_[m].requires_grad || nodes_[s].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [m, s, c, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            if (t.nodes_[m].requires_grad) {
                Tensor2& gm = t.grad_mut(m);
                for (size_t i = 0; i < g.data.size(); ++i) gm.data[i] += c * g.data[i];
            }
            if (t.nodes_[s].requires_grad) {
                const Tensor2& mv = t.nodes_[m].value;
                double acc = 0.0;
                for (size_t i = 0; i < g.data.size(); ++i) acc += g.data[i] * mv.data[i];
                t.grad_mut(s).data[0] += acc;
            }
        };
    }
    return id;
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
    const Tensor2& av = nodes_[a].value;
    Tensor2 out(av.rows, av.cols);
    for (int i = 0; i < av.rows; ++i) {
        // Stabilized by row-max subtraction; -inf entries mark excluded support
        // and come out as exact zeros.
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < av.cols; ++j) {
            const double x = av.at(i, j);
            if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
                throw std::runtime_error("softmax_rows: non-finite input");
            m = std::max(m, x);
        }
        if (m == -std::numeric_limits<double>::infinity())
            throw std::runtime_error("softmax_rows: row has empty support");
        double denom = 0.0;
        for (int j = 0; j < av.cols; ++j) {
            const double e = std::exp(av.at(i, j) - m);
            out.at(i, j) = e;
            denom += e;
        }
        const double inv = 1.0 / denom;
        for (int j = 0; j < av.cols; ++j) out.at(i, j) *= inv;
    }
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& y = t.nodes_[id].value;
            Tensor2& ga = t.grad_mut(a);
            for (int i = 0; i < g.rows; ++i) {
                double dot = 0.0;
                for (int j = 0; j < g.cols; ++j) dot += g.at(i, j) * y.at(i, j);
                for (int j = 0; j < g.cols; ++j) ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
            }
        };
    }
    return id;
}

Tape::NodeId Tape::gelu(NodeId a) {
    // Exact form x * Phi(x) with Phi the standard normal CDF via erf.
    const Tensor2& av = nodes_[a].value;
    Tensor2 out = av;
    for (double& v : out.data) v = v * 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& x = t.nodes_[a].value;
            Tensor2& ga = t.grad_mut(a);
            for (size_t i = 0; i < g.data.size(); ++i) {
                const double xv = x.data[i];
                const double cdf = 0.5 * (1.0 + std::erf(xv * kInvSqrt2));
                const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xv * xv);
                ga.data[i] += g.data[i] * (cdf + xv * pdf);
            }
        };
    }
    return id;
}

Tape::NodeId Tape::tan_elem(NodeId a) {
    Tensor2 out = nodes_[a].value;
    for (double& v : out.data) v = std::tan(v);
    check_finite_values(out, "tan_elem");
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& y = t.nodes_[id].value;
            Tensor2& ga = t.grad_mut(a);
            for (size_t i = 0; i < g.data.size(); ++i)
                ga.data[i] += g.data[i] * (1.0 + y.data[i] * y.data[i]);
        };
    }
    return id;
}

Tape::NodeId Tape::sqrt_elem(NodeId a) {
    const Tensor2& av = nodes_[a].value;
    for (double v : av.data)
        if (v < 0.0) throw std::runtime_error("sqrt_elem: negative entry");
    Tensor2 out = av;
    for (double& v : out.data) v = std::sqrt(v);
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& y = t.nodes_[id].value;
            Tensor2& ga = t.grad_mut(a);
            for (size_t i = 0; i < g.data.size(); ++i)
                ga.data[i] += g.data[i] * 0.5 / y.data[i];
        };
    }
    return id;
}

Tape::NodeId Tape::abs_elem(NodeId a) {
    Tensor2 out = nodes_[a].value;
    for (double& v : out.data) v = std::fabs(v);
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            const Tensor2& x = t.nodes_[a].value;
            Tensor2& ga = t.grad_mut(a);
            for (size_t i = 0; i < g.data.size(); ++i) {
                const double s = x.data[i] > 0.0 ? 1.0 : (x.data[i] < 0.0 ? -1.0 : 0.0);
                ga.data[i] += g.data[i] * s;
            }
        };
    }
    return id;
}

Tape::NodeId Tape::sum_all(NodeId a) {
    Tensor2 out(1, 1);
    out.data[0] = sum_entries(nodes_[a].value);
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg);
    if (rg) {
        nodes_[id].back = [a, id](Tape& t) {
            const double g = t.nodes_[id].grad.data[0];
            Tensor2& ga = t.grad_mut(a);
            for (double& v : ga.data) v += g;
        };
    }
    return id;
}

Tape::NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    const int rows = nodes_[parts[0]].value.rows;
    int cols = 0;
    bool rg = false;
    for (NodeId p : parts) {
        if (nodes_[p].value.rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += nodes_[p].value.cols;
        rg = rg || nodes_[p].requires_grad;
    }
    Tensor2 out(rows, cols);
    int off = 0;
    for (NodeId p : parts) {
        const Tensor2& pv = nodes_[p].value;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < pv.cols; ++j) out.at(i, off + j) = pv.at(i, j);
        off += pv.cols;
    }
    NodeId id = push(std::move(out), rg);
    if (rg) {
        std::vector<NodeId> ps = parts;
        nodes_[id].back = [ps, id](Tape& t) {
            const Tensor2& g = t.nodes_[id].grad;
            int off2 = 0;
            for (NodeId p : ps) {
                const int pc = t.nodes_[p].value.cols;
                if (t.nodes_[p].requires_grad) {
                    Tensor2& gp = t.grad_mut(p);
                    for (int i = 0; i < g.rows; ++i)
                        for (int j = 0; j < pc; ++j) gp.at(i, j) += g.at(i, off2 + j);
                }
                off2 += pc;
            }
        };
    }
    return id;
}

Tape::NodeId Tape::linear(NodeId m, Param& w, Param& b) {
    if (nodes_[m].value.cols != w.value.rows)
        throw std::invalid_argument("linear: input cols must equal weight rows");
    return add_rowvec(matmul(m, leaf(w)), leaf(b));
}

void Tape::backward(NodeId loss) {
    const Tensor2& lv = nodes_[loss].value;
    if (lv.rows != 1 || lv.cols != 1) throw std::invalid_argument("backward: loss must be scalar (1x1)");
    if (!nodes_[loss].requires_grad) return;
    nodes_[loss].grad.data[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.requires_grad && n.back) n.back(*this);
    }
    for (auto& [p, id] : leaf_ids_) {
        Node& n = nodes_[id];
        if (!n.param) continue;
        Tensor2& pg = n.param->grad;
        for (size_t i = 0; i < pg.data.size(); ++i) pg.data[i] += n.grad.data[i];
    }
}

}  // namespace pit
