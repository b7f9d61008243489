#include "lznet/tape.hpp"

#include <cmath>

#include "lznet/fft.hpp"

namespace lznet::ad {

namespace {

// --- raw matrix kernels (row-major) ---------------------------------------

// C += or = A(m x k) . B(k x n)
void mm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = pc + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = pa[i * k + l];
            const double* bl = pb + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

// C = A(m x k) . B(n x k)^T. Four independent accumulators let the
// reduction vectorize without changing run-to-run determinism.
void mm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
    const std::size_t k4 = k - k % 4;
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = pa + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = pb + j * k;
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            for (std::size_t l = 0; l < k4; l += 4) {
                a0 += ai[l] * bj[l];
                a1 += ai[l + 1] * bj[l + 1];
                a2 += ai[l + 2] * bj[l + 2];
                a3 += ai[l + 3] * bj[l + 3];
            }
            double acc = (a0 + a1) + (a2 + a3);
            for (std::size_t l = k4; l < k; ++l) acc += ai[l] * bj[l];
            pc[i * n + j] += acc;
        }
    }
}

// C = A(m x k)^T . B(m x n) -> (k x n)
void mm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = pa + i * k;
        const double* bi = pb + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            double* cl = pc + l * n;
            for (std::size_t j = 0; j < n; ++j) cl[j] += av * bi[j];
        }
    }
}

// --- rowwise spectral helpers ----------------------------------------------

std::size_t row_count(const Tensor& t) { return t.rank() == 2 ? t.shape()[0] : 1; }

std::vector<fft::cplx> row_spectrum(const Tensor& t, std::size_t row, std::size_t d) {
    const double* p = t.data().data() + row * d;
    return fft::spectrum(std::vector<double>(p, p + d));
}

void store_inverse_real(std::vector<fft::cplx> spec, double* out) {
    const auto real = fft::inverse_real(std::move(spec));
    for (std::size_t i = 0; i < real.size(); ++i) out[i] = real[i];
}

enum class SpectralOp { kConv, kCorr };

// c_row = conv(a_row, b_row) or corr(a_row, b_row), with single-row broadcast.
Tensor spectral_pairwise(const Tensor& a, const Tensor& b, SpectralOp op) {
    const std::size_t d = a.cols();
    if (b.cols() != d) throw ShapeMismatchError("spectral op: dimension mismatch");
    const std::size_t ra = row_count(a), rb = row_count(b);
    if (ra != rb && ra != 1 && rb != 1) {
        throw ShapeMismatchError("spectral op: row counts incompatible");
    }
    const std::size_t rows = std::max(ra, rb);
    Tensor out = (a.rank() == 2 || b.rank() == 2) ? Tensor({rows, d}) : Tensor({d});

    std::vector<fft::cplx> sa0, sb0;  // spectra of broadcast operands
    if (ra == 1) sa0 = row_spectrum(a, 0, d);
    if (rb == 1) sb0 = row_spectrum(b, 0, d);

    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<fft::cplx> sa = (ra == 1) ? sa0 : row_spectrum(a, r, d);
        const std::vector<fft::cplx> sb = (rb == 1) ? sb0 : row_spectrum(b, r, d);
        for (std::size_t k = 0; k < d; ++k) {
            sa[k] = (op == SpectralOp::kConv) ? sa[k] * sb[k] : sa[k] * std::conj(sb[k]);
        }
        store_inverse_real(std::move(sa), out.data().data() + r * d);
    }
    return out;
}

// Accumulates d into grad; if grad holds a single (broadcast) row and d has
// several, the rows of d are summed.
void reduce_rows_into(Tensor& grad, const Tensor& d) {
    if (grad.numel() == d.numel()) {
        for (std::size_t i = 0; i < d.numel(); ++i) grad[i] += d[i];
        return;
    }
    const std::size_t cols = grad.numel();
    const std::size_t rows = d.numel() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) grad[c] += d[r * cols + c];
    }
}

}  // namespace

// --- Value -------------------------------------------------------------------

const Tensor& Value::val() const { return tape_->value(*this); }

// --- Tape plumbing -------------------------------------------------------------

Value Tape::emplace(Tensor value, bool requires_grad,
                    std::function<void(Tape&, const Tensor&)> backward) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    if (requires_grad) {
        node.grad = Tensor(node.value.shape());
        node.backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return Value(this, nodes_.size() - 1);
}

Tape::Node& Tape::node(Value v) { return nodes_[v.id()]; }
const Tape::Node& Tape::node(Value v) const { return nodes_[v.id()]; }

void Tape::check_same_tape(Value v) const {
    if (v.tape() != this) throw Error("tape: value belongs to a different tape");
}

bool Tape::tracked(Value v) const {
    check_same_tape(v);
    return node(v).requires_grad;
}

void Tape::accumulate(std::size_t id, const Tensor& delta) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    auto& g = n.grad.data();
    const auto& d = delta.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += d[i];
}

Value Tape::leaf(Tensor t, bool requires_grad) {
    return emplace(std::move(t), requires_grad, {});
}

const Tensor& Tape::value(Value v) const {
    check_same_tape(v);
    return node(v).value;
}

const Tensor& Tape::grad(Value v) const {
    check_same_tape(v);
    const Node& n = node(v);
    if (!n.requires_grad) throw Error("tape: gradient of an untracked value");
    return n.grad;
}

void Tape::backward(Value loss) {
    check_same_tape(loss);
    if (backward_done_) throw Error("tape: backward already ran for this region");
    if (node(loss).value.numel() != 1) throw Error("tape: loss must be a scalar");
    if (!node(loss).requires_grad) {
        throw Error("tape: loss does not depend on any tracked value");
    }
    backward_done_ = true;
    node(loss).grad.data()[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.backward) continue;
        bool any = false;
        for (double g : n.grad.data()) {
            if (g != 0.0) {
                any = true;
                break;
            }
        }
        if (any) n.backward(*this, n.grad);
    }
}

// --- elementwise primitives --------------------------------------------------

Value Tape::add(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (!ta.same_shape(tb)) throw ShapeMismatchError("add: shape mismatch");
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ta[i] + tb[i];
    const std::size_t ia = a.id(), ib = b.id();
    return emplace(std::move(out), tracked(a) || tracked(b),
                   [ia, ib](Tape& t, const Tensor& g) {
                       t.accumulate(ia, g);
                       t.accumulate(ib, g);
                   });
}

Value Tape::sub(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (!ta.same_shape(tb)) throw ShapeMismatchError("sub: shape mismatch");
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ta[i] - tb[i];
    const std::size_t ia = a.id(), ib = b.id();
    return emplace(std::move(out), tracked(a) || tracked(b),
                   [ia, ib](Tape& t, const Tensor& g) {
                       t.accumulate(ia, g);
                       Node& nb = t.nodes_[ib];
                       if (nb.requires_grad) {
                           for (std::size_t i = 0; i < g.numel(); ++i) {
                               nb.grad.data()[i] -= g[i];
                           }
                       }
                   });
}

Value Tape::mul(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (!ta.same_shape(tb)) throw ShapeMismatchError("mul: shape mismatch");
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ta[i] * tb[i];
    const std::size_t ia = a.id(), ib = b.id();
    return emplace(std::move(out), tracked(a) || tracked(b),
                   [ia, ib](Tape& t, const Tensor& g) {
                       const Tensor& va = t.nodes_[ia].value;
                       const Tensor& vb = t.nodes_[ib].value;
                       Node& na = t.nodes_[ia];
                       Node& nb = t.nodes_[ib];
                       for (std::size_t i = 0; i < g.numel(); ++i) {
                           if (na.requires_grad) na.grad.data()[i] += g[i] * vb[i];
                           if (nb.requires_grad) nb.grad.data()[i] += g[i] * va[i];
                       }
                   });
}

Value Tape::affine(Value a, double alpha, double beta) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = alpha * ta[i] + beta;
    const std::size_t ia = a.id();
    return emplace(std::move(out), tracked(a), [ia, alpha](Tape& t, const Tensor& g) {
        Node& na = t.nodes_[ia];
        if (!na.requires_grad) return;
        for (std::size_t i = 0; i < g.numel(); ++i) na.grad.data()[i] += alpha * g[i];
    });
}

Value Tape::sigmoid(Value a) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-ta[i]));
    const std::size_t ia = a.id();
    Value v = emplace(std::move(out), tracked(a), {});
    const std::size_t io = v.id();
    if (node(v).requires_grad) {
        node(v).backward = [ia, io](Tape& t, const Tensor& g) {
            const Tensor& s = t.nodes_[io].value;
            Node& na = t.nodes_[ia];
            for (std::size_t i = 0; i < g.numel(); ++i) {
                na.grad.data()[i] += g[i] * s[i] * (1.0 - s[i]);
            }
        };
    }
    return v;
}

Value Tape::tanh(Value a) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(ta[i]);
    const std::size_t ia = a.id();
    Value v = emplace(std::move(out), tracked(a), {});
    const std::size_t io = v.id();
    if (node(v).requires_grad) {
        node(v).backward = [ia, io](Tape& t, const Tensor& g) {
            const Tensor& y = t.nodes_[io].value;
            Node& na = t.nodes_[ia];
            for (std::size_t i = 0; i < g.numel(); ++i) {
                na.grad.data()[i] += g[i] * (1.0 - y[i] * y[i]);
            }
        };
    }
    return v;
}

Value Tape::log(Value a) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::log(ta[i]);
    const std::size_t ia = a.id();
    return emplace(std::move(out), tracked(a), [ia](Tape& t, const Tensor& g) {
        Node& na = t.nodes_[ia];
        if (!na.requires_grad) return;
        for (std::size_t i = 0; i < g.numel(); ++i) {
            na.grad.data()[i] += g[i] / na.value[i];
        }
    });
}

// --- linear algebra -----------------------------------------------------------

Value Tape::matmul(Value a, Value b, bool transpose_b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 2 || tb.rank() != 2) throw ShapeMismatchError("matmul: rank-2 only");
    const std::size_t m = ta.rows(), k = ta.cols();
    const std::size_t n = transpose_b ? tb.rows() : tb.cols();
    const std::size_t kb = transpose_b ? tb.cols() : tb.rows();
    if (k != kb) {
        throw ShapeMismatchError("matmul: inner dimensions disagree " +
                                 shape_string(ta) + " vs " + shape_string(tb));
    }
    Tensor out({m, n});
    if (transpose_b) {
        mm_nt(ta, tb, out);
    } else {
        mm_nn(ta, tb, out);
    }
    const std::size_t ia = a.id(), ib = b.id();
    return emplace(std::move(out), tracked(a) || tracked(b),
                   [ia, ib, transpose_b](Tape& t, const Tensor& g) {
                       Node& na = t.nodes_[ia];
                       Node& nb = t.nodes_[ib];
                       if (transpose_b) {
                           // C = A.B^T: dA = G.B, dB = G^T.A
                           if (na.requires_grad) mm_nn(g, nb.value, na.grad);
                           if (nb.requires_grad) mm_tn(g, na.value, nb.grad);
                       } else {
                           // C = A.B: dA = G.B^T, dB = A^T.G
                           if (na.requires_grad) mm_nt(g, nb.value, na.grad);
                           if (nb.requires_grad) mm_tn(na.value, g, nb.grad);
                       }
                   });
}

Value Tape::add_rowvec(Value m, Value v) {
    check_same_tape(m);
    check_same_tape(v);
    const Tensor& tm = node(m).value;
    const Tensor& tv = node(v).value;
    if (tm.rank() != 2 || tv.rank() != 1 || tv.shape()[0] != tm.cols()) {
        throw ShapeMismatchError("add_rowvec: need (B x N) and (N)");
    }
    Tensor out(tm.shape());
    const std::size_t rows = tm.rows(), cols = tm.cols();
    const double* pm = tm.data().data();
    const double* pv = tv.data().data();
    double* po = out.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) po[r * cols + c] = pm[r * cols + c] + pv[c];
    }
    const std::size_t im = m.id(), iv = v.id();
    return emplace(std::move(out), tracked(m) || tracked(v),
                   [im, iv, rows, cols](Tape& t, const Tensor& g) {
                       t.accumulate(im, g);
                       Node& nv = t.nodes_[iv];
                       if (nv.requires_grad) {
                           const double* pg = g.data().data();
                           double* vg = nv.grad.data().data();
                           for (std::size_t r = 0; r < rows; ++r) {
                               const double* gr = pg + r * cols;
                               for (std::size_t c = 0; c < cols; ++c) vg[c] += gr[c];
                           }
                       }
                   });
}

Value Tape::add_scalar(Value a, Value s) {
    check_same_tape(a);
    check_same_tape(s);
    const Tensor& ta = node(a).value;
    if (node(s).value.numel() != 1) throw ShapeMismatchError("add_scalar: s not scalar");
    const double sv = node(s).value.data()[0];
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = ta[i] + sv;
    const std::size_t ia = a.id(), is = s.id();
    return emplace(std::move(out), tracked(a) || tracked(s),
                   [ia, is](Tape& t, const Tensor& g) {
                       t.accumulate(ia, g);
                       Node& ns = t.nodes_[is];
                       if (ns.requires_grad) {
                           double acc = 0.0;
                           for (double e : g.data()) acc += e;
                           ns.grad.data()[0] += acc;
                       }
                   });
}

Value Tape::row_scale(Value m, Value s) {
    check_same_tape(m);
    check_same_tape(s);
    const Tensor& tm = node(m).value;
    const Tensor& ts = node(s).value;
    if (tm.rank() != 2 || ts.numel() != tm.rows()) {
        throw ShapeMismatchError("row_scale: need (B x N) and one scale per row");
    }
    const std::size_t rows = tm.rows(), cols = tm.cols();
    Tensor out(tm.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = tm.at(r, c) * ts[r];
    }
    const std::size_t im = m.id(), is = s.id();
    return emplace(std::move(out), tracked(m) || tracked(s),
                   [im, is, rows, cols](Tape& t, const Tensor& g) {
                       Node& nm = t.nodes_[im];
                       Node& ns = t.nodes_[is];
                       const double* pg = g.data().data();
                       for (std::size_t r = 0; r < rows; ++r) {
                           const double* gr = pg + r * cols;
                           if (nm.requires_grad) {
                               double* mg = nm.grad.data().data() + r * cols;
                               const double sv = ns.value[r];
                               for (std::size_t c = 0; c < cols; ++c) mg[c] += gr[c] * sv;
                           }
                           if (ns.requires_grad) {
                               const double* mv = nm.value.data().data() + r * cols;
                               double acc = 0.0;
                               for (std::size_t c = 0; c < cols; ++c) acc += gr[c] * mv[c];
                               ns.grad.data()[r] += acc;
                           }
                       }
                   });
}

Value Tape::row_dot(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 2 || !ta.same_shape(tb)) {
        throw ShapeMismatchError("row_dot: need equal (B x N) shapes");
    }
    const std::size_t rows = ta.rows(), cols = ta.cols();
    Tensor out({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += ta.at(r, c) * tb.at(r, c);
        out[r] = acc;
    }
    const std::size_t ia = a.id(), ib = b.id();
    return emplace(std::move(out), tracked(a) || tracked(b),
                   [ia, ib, rows, cols](Tape& t, const Tensor& g) {
                       Node& na = t.nodes_[ia];
                       Node& nb = t.nodes_[ib];
                       for (std::size_t r = 0; r < rows; ++r) {
                           const double gr = g[r];
                           for (std::size_t c = 0; c < cols; ++c) {
                               if (na.requires_grad) {
                                   na.grad.at(r, c) += gr * nb.value.at(r, c);
                               }
                               if (nb.requires_grad) {
                                   nb.grad.at(r, c) += gr * na.value.at(r, c);
                               }
                           }
                       }
                   });
}

Value Tape::bilinear(Value x, Value w, Value y, Value bias) {
    Value xw = matmul(x, w);  // B x H
    const Tensor& ty = node(y).value;
    Value z;
    if (ty.rank() == 2) {
        z = row_dot(xw, y);
    } else {
        // shared reference vector: dot each row of xw with y
        const std::size_t rows = node(xw).value.rows();
        const std::size_t cols = node(xw).value.cols();
        if (ty.shape()[0] != cols) throw ShapeMismatchError("bilinear: y length");
        const Tensor& txw = node(xw).value;
        Tensor out({rows});
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < cols; ++c) acc += txw.at(r, c) * ty[c];
            out[r] = acc;
        }
        const std::size_t im = xw.id(), iv = y.id();
        z = emplace(std::move(out), tracked(xw) || tracked(y),
                    [im, iv, rows, cols](Tape& t, const Tensor& g) {
                        Node& nm = t.nodes_[im];
                        Node& nv = t.nodes_[iv];
                        for (std::size_t r = 0; r < rows; ++r) {
                            const double gr = g[r];
                            for (std::size_t c = 0; c < cols; ++c) {
                                if (nm.requires_grad) {
                                    nm.grad.at(r, c) += gr * nv.value[c];
                                }
                                if (nv.requires_grad) {
                                    nv.grad.data()[c] += gr * nm.value.at(r, c);
                                }
                            }
                        }
                    });
    }
    return add_scalar(z, bias);
}

// --- shape ----------------------------------------------------------------------

Value Tape::slice_cols(Value a, std::size_t c0, std::size_t c1) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    if (ta.rank() != 2 || c1 > ta.cols() || c0 >= c1) {
        throw ShapeMismatchError("slice_cols: bad range");
    }
    const std::size_t rows = ta.rows(), cols = ta.cols(), width = c1 - c0;
    Tensor out({rows, width});
    const double* pa = ta.data().data();
    double* po = out.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* ar = pa + r * cols + c0;
        double* outr = po + r * width;
        for (std::size_t c = 0; c < width; ++c) outr[c] = ar[c];
    }
    const std::size_t ia = a.id();
    return emplace(std::move(out), tracked(a),
                   [ia, rows, cols, c0, width](Tape& t, const Tensor& g) {
                       Node& na = t.nodes_[ia];
                       if (!na.requires_grad) return;
                       const double* pg = g.data().data();
                       double* pa = na.grad.data().data();
                       for (std::size_t r = 0; r < rows; ++r) {
                           const double* gr = pg + r * width;
                           double* ar = pa + r * cols + c0;
                           for (std::size_t c = 0; c < width; ++c) ar[c] += gr[c];
                       }
                   });
}

Value Tape::concat_cols(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 2 || tb.rank() != 2 || ta.rows() != tb.rows()) {
        throw ShapeMismatchError("concat_cols: row counts differ");
    }
    const std::size_t rows = ta.rows(), ca = ta.cols(), cb = tb.cols();
    Tensor out({rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ca; ++c) out.at(r, c) = ta.at(r, c);
        for (std::size_t c = 0; c < cb; ++c) out.at(r, ca + c) = tb.at(r, c);
    }
    const std::size_t ia = a.id(), ib = b.id();
    return emplace(std::move(out), tracked(a) || tracked(b),
                   [ia, ib, rows, ca, cb](Tape& t, const Tensor& g) {
                       Node& na = t.nodes_[ia];
                       Node& nb = t.nodes_[ib];
                       for (std::size_t r = 0; r < rows; ++r) {
                           if (na.requires_grad) {
                               for (std::size_t c = 0; c < ca; ++c) {
                                   na.grad.at(r, c) += g.at(r, c);
                               }
                           }
                           if (nb.requires_grad) {
                               for (std::size_t c = 0; c < cb; ++c) {
                                   nb.grad.at(r, c) += g.at(r, ca + c);
                               }
                           }
                       }
                   });
}

Value Tape::stack_cols(std::span<const Value> cols) {
    if (cols.empty()) throw ShapeMismatchError("stack_cols: empty input");
    const std::size_t rows = node(cols[0]).value.numel();
    const std::size_t k = cols.size();
    Tensor out({rows, k});
    bool req = false;
    std::vector<std::size_t> ids(k);
    for (std::size_t j = 0; j < k; ++j) {
        check_same_tape(cols[j]);
        const Tensor& tc = node(cols[j]).value;
        if (tc.rank() != 1 || tc.numel() != rows) {
            throw ShapeMismatchError("stack_cols: need equal-length vectors");
        }
        for (std::size_t r = 0; r < rows; ++r) out.at(r, j) = tc[r];
        req = req || tracked(cols[j]);
        ids[j] = cols[j].id();
    }
    return emplace(std::move(out), req,
                   [ids = std::move(ids), rows](Tape& t, const Tensor& g) {
                       for (std::size_t j = 0; j < ids.size(); ++j) {
                           Node& n = t.nodes_[ids[j]];
                           if (!n.requires_grad) continue;
                           for (std::size_t r = 0; r < rows; ++r) {
                               n.grad.data()[r] += g.at(r, j);
                           }
                       }
                   });
}

// --- reductions and losses ---------------------------------------------------

Value Tape::sum(Value a) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    double acc = 0.0;
    for (double e : ta.data()) acc += e;
    const std::size_t ia = a.id();
    return emplace(Tensor::scalar(acc), tracked(a), [ia](Tape& t, const Tensor& g) {
        Node& na = t.nodes_[ia];
        if (!na.requires_grad) return;
        const double gv = g.data()[0];
        for (auto& e : na.grad.data()) e += gv;
    });
}

Value Tape::mean(Value a) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    double acc = 0.0;
    for (double e : ta.data()) acc += e;
    const double inv = 1.0 / static_cast<double>(ta.numel());
    const std::size_t ia = a.id();
    return emplace(Tensor::scalar(acc * inv), tracked(a),
                   [ia, inv](Tape& t, const Tensor& g) {
                       Node& na = t.nodes_[ia];
                       if (!na.requires_grad) return;
                       const double gv = g.data()[0] * inv;
                       for (auto& e : na.grad.data()) e += gv;
                   });
}

Value Tape::softmax_rows(Value a) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    if (ta.rank() != 2) throw ShapeMismatchError("softmax_rows: rank-2 only");
    const std::size_t rows = ta.rows(), cols = ta.cols();
    Tensor out(ta.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = -1e300;
        for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, ta.at(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double e = std::exp(ta.at(r, c) - mx);
            out.at(r, c) = e;
            z += e;
        }
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= z;
    }
    const std::size_t ia = a.id();
    Value v = emplace(std::move(out), tracked(a), {});
    const std::size_t io = v.id();
    if (node(v).requires_grad) {
        node(v).backward = [ia, io, rows, cols](Tape& t, const Tensor& g) {
            const Tensor& s = t.nodes_[io].value;
            Node& na = t.nodes_[ia];
            if (!na.requires_grad) return;
            for (std::size_t r = 0; r < rows; ++r) {
                double inner = 0.0;
                for (std::size_t c = 0; c < cols; ++c) inner += g.at(r, c) * s.at(r, c);
                for (std::size_t c = 0; c < cols; ++c) {
                    na.grad.at(r, c) += s.at(r, c) * (g.at(r, c) - inner);
                }
            }
        };
    }
    return v;
}

Value Tape::mse_loss(Value pred, const Tensor& target) {
    check_same_tape(pred);
    const Tensor& tp = node(pred).value;
    if (!tp.same_shape(target)) throw ShapeMismatchError("mse_loss: shape mismatch");
    const std::size_t n = tp.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = tp[i] - target[i];
        acc += d * d;
    }
    const std::size_t ip = pred.id();
    return emplace(Tensor::scalar(acc / static_cast<double>(n)), tracked(pred),
                   [ip, target, n](Tape& t, const Tensor& g) {
                       Node& np = t.nodes_[ip];
                       if (!np.requires_grad) return;
                       const double scale = 2.0 * g.data()[0] / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) {
                           np.grad.data()[i] += scale * (np.value[i] - target[i]);
                       }
                   });
}

Value Tape::softmax_xent(Value logits, const std::vector<int>& labels) {
    check_same_tape(logits);
    const Tensor& tl = node(logits).value;
    if (tl.rank() != 2 || labels.size() != tl.rows()) {
        throw ShapeMismatchError("softmax_xent: need (B x K) logits and B labels");
    }
    const std::size_t rows = tl.rows(), cols = tl.cols();
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= cols) {
            throw Error("softmax_xent: label out of range");
        }
    }
    double loss = 0.0;
    Tensor probs({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = -1e300;
        for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, tl.at(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += std::exp(tl.at(r, c) - mx);
        const double lse = mx + std::log(z);
        loss += lse - tl.at(r, static_cast<std::size_t>(labels[r]));
        for (std::size_t c = 0; c < cols; ++c) {
            probs.at(r, c) = std::exp(tl.at(r, c) - lse);
        }
    }
    loss /= static_cast<double>(rows);
    const std::size_t il = logits.id();
    return emplace(Tensor::scalar(loss), tracked(logits),
                   [il, probs = std::move(probs), labels](Tape& t, const Tensor& g) {
                       Node& nl = t.nodes_[il];
                       if (!nl.requires_grad) return;
                       const std::size_t rows = probs.rows(), cols = probs.cols();
                       const double scale = g.data()[0] / static_cast<double>(rows);
                       for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < cols; ++c) {
                               double p = probs.at(r, c);
                               if (c == static_cast<std::size_t>(labels[r])) p -= 1.0;
                               nl.grad.at(r, c) += scale * p;
                           }
                       }
                   });
}

// --- spectral ------------------------------------------------------------------

Value Tape::circ_conv(Value a, Value b) {
    check_same_tape(a);
    check_same_tape(b);
    Tensor out = spectral_pairwise(node(a).value, node(b).value, SpectralOp::kConv);
    const std::size_t ia = a.id(), ib = b.id();
    return emplace(std::move(out), tracked(a) || tracked(b),
                   [ia, ib](Tape& t, const Tensor& g) {
                       Node& na = t.nodes_[ia];
                       Node& nb = t.nodes_[ib];
                       // c = a (*) b: da = corr(g, b), db = corr(g, a)
                       if (na.requires_grad) {
                           Tensor d = spectral_pairwise(g, nb.value, SpectralOp::kCorr);
                           reduce_rows_into(na.grad, d);
                       }
                       if (nb.requires_grad) {
                           Tensor d = spectral_pairwise(g, na.value, SpectralOp::kCorr);
                           reduce_rows_into(nb.grad, d);
                       }
                   });
}

Value Tape::circ_corr(Value s, Value a) {
    check_same_tape(s);
    check_same_tape(a);
    Tensor out = spectral_pairwise(node(s).value, node(a).value, SpectralOp::kCorr);
    const std::size_t is = s.id(), ia = a.id();
    return emplace(std::move(out), tracked(s) || tracked(a),
                   [is, ia](Tape& t, const Tensor& g) {
                       Node& ns = t.nodes_[is];
                       Node& na = t.nodes_[ia];
                       // r = corr(s, a): ds = conv(g, a), da = corr(s, g)
                       if (ns.requires_grad) {
                           Tensor d = spectral_pairwise(g, na.value, SpectralOp::kConv);
                           reduce_rows_into(ns.grad, d);
                       }
                       if (na.requires_grad) {
                           Tensor d = spectral_pairwise(ns.value, g, SpectralOp::kCorr);
                           reduce_rows_into(na.grad, d);
                       }
                   });
}

Value Tape::spectral_normalize(Value a) {
    check_same_tape(a);
    const Tensor& ta = node(a).value;
    const std::size_t rows = row_count(ta), d = ta.cols();
    Tensor out(ta.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        auto spec = row_spectrum(ta, r, d);
        for (auto& z : spec) {
            const double mag = std::abs(z);
            if (mag < kSpectrumEpsilon) {
                throw DegenerateSpectrumError(
                    "spectral_normalize: component below tolerance");
            }
            z /= mag;
        }
        store_inverse_real(std::move(spec), out.data().data() + r * d);
    }
    const std::size_t ia = a.id();
    return emplace(std::move(out), tracked(a), [ia, rows, d](Tape& t, const Tensor& g) {
        Node& na = t.nodes_[ia];
        if (!na.requires_grad) return;
        const double nd = static_cast<double>(d);
        for (std::size_t r = 0; r < rows; ++r) {
            auto spec = row_spectrum(na.value, r, d);      // X
            auto gbar = row_spectrum(g, r, d);             // F(gbar)
            // adjoint through y = Re(ifft(X / |X|)):
            //   Ubar = F(gbar)/n
            //   Xbar_k = (Ubar_k - U_k Re(conj(U_k) Ubar_k)) / |X_k|
            //   xbar = Re(n * ifft(Xbar))
            std::vector<fft::cplx> xbar(d);
            for (std::size_t k = 0; k < d; ++k) {
                const double mag = std::abs(spec[k]);
                const fft::cplx u = spec[k] / mag;
                const fft::cplx ubar = gbar[k] / nd;
                const double radial = std::real(std::conj(u) * ubar);
                xbar[k] = (ubar - u * radial) / mag;
            }
            fft::transform(xbar, true);
            for (std::size_t j = 0; j < d; ++j) {
                na.grad.data()[r * d + j] += nd * xbar[j].real();
            }
        }
    });
}

// --- VTB -----------------------------------------------------------------------

namespace {

std::size_t vtb_side(std::size_t d) {
    const auto side =
        static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    if (side < 2 || side * side != d) {
        throw InvalidDimensionError("vtb: dimension " + std::to_string(d) +
                                    " is not a perfect square >= 4");
    }
    return side;
}

enum class VtbKind { kBind, kUnbind };

// bind:   Z_r = c * X_r Y_r^T   (X_r, Y_r are side x side reshapes of the rows)
// unbind: Z_r = c * X_r Y_r
Tensor vtb_pairwise(const Tensor& x, const Tensor& y, VtbKind kind) {
    const std::size_t d = x.cols();
    if (y.cols() != d) throw ShapeMismatchError("vtb: dimension mismatch");
    const std::size_t side = vtb_side(d);
    const double scale = std::pow(static_cast<double>(d), 0.25);
    const std::size_t rx = row_count(x), ry = row_count(y);
    if (rx != ry && rx != 1 && ry != 1) {
        throw ShapeMismatchError("vtb: row counts incompatible");
    }
    const std::size_t rows = std::max(rx, ry);
    Tensor out = (x.rank() == 2 || y.rank() == 2) ? Tensor({rows, d}) : Tensor({d});
    for (std::size_t r = 0; r < rows; ++r) {
        const double* px = x.data().data() + (rx == 1 ? 0 : r) * d;
        const double* py = y.data().data() + (ry == 1 ? 0 : r) * d;
        double* po = out.data().data() + r * d;
        for (std::size_t blk = 0; blk < side; ++blk) {
            for (std::size_t i = 0; i < side; ++i) {
                double acc = 0.0;
                if (kind == VtbKind::kBind) {
                    for (std::size_t j = 0; j < side; ++j) {
                        acc += py[i * side + j] * px[blk * side + j];
                    }
                } else {
                    for (std::size_t j = 0; j < side; ++j) {
                        acc += py[j * side + i] * px[blk * side + j];
                    }
                }
                po[blk * side + i] = scale * acc;
            }
        }
    }
    return out;
}

// dY for bind:   c * G_r^T X_r; for unbind: c * X_r^T G_r. Accumulated rowwise
// (summed when y was broadcast).
void vtb_grad_y(Tensor& ygrad, const Tensor& g, const Tensor& x, VtbKind kind) {
    const std::size_t d = g.cols();
    const std::size_t side = vtb_side(d);
    const double scale = std::pow(static_cast<double>(d), 0.25);
    const std::size_t rows = row_count(g);
    const std::size_t rx = row_count(x);
    const bool broadcast_y = ygrad.numel() == d && rows > 1;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* pg = g.data().data() + r * d;
        const double* px = x.data().data() + (rx == 1 ? 0 : r) * d;
        double* py = ygrad.data().data() + (broadcast_y ? 0 : r * d);
        for (std::size_t i = 0; i < side; ++i) {
            for (std::size_t j = 0; j < side; ++j) {
                double acc = 0.0;
                for (std::size_t blk = 0; blk < side; ++blk) {
                    if (kind == VtbKind::kBind) {
                        // dY[i][j] += sum_blk G[blk][i] X[blk][j]
                        acc += pg[blk * side + i] * px[blk * side + j];
                    } else {
                        // dY[j][i] formulation folded in: dY = X^T G
                        acc += px[blk * side + i] * pg[blk * side + j];
                    }
                }
                py[i * side + j] += scale * acc;
            }
        }
    }
}

}  // namespace

Value Tape::vtb_bind(Value x, Value y) {
    check_same_tape(x);
    check_same_tape(y);
    Tensor out = vtb_pairwise(node(x).value, node(y).value, VtbKind::kBind);
    const std::size_t ix = x.id(), iy = y.id();
    return emplace(std::move(out), tracked(x) || tracked(y),
                   [ix, iy](Tape& t, const Tensor& g) {
                       Node& nx = t.nodes_[ix];
                       Node& ny = t.nodes_[iy];
                       // z = V_y x: dx = V_y^T g, dy per row: c G^T X
                       if (nx.requires_grad) {
                           Tensor d = vtb_pairwise(g, ny.value, VtbKind::kUnbind);
                           reduce_rows_into(nx.grad, d);
                       }
                       if (ny.requires_grad) {
                           vtb_grad_y(ny.grad, g, nx.value, VtbKind::kBind);
                       }
                   });
}

Value Tape::vtb_unbind(Value s, Value y) {
    check_same_tape(s);
    check_same_tape(y);
    Tensor out = vtb_pairwise(node(s).value, node(y).value, VtbKind::kUnbind);
    const std::size_t is = s.id(), iy = y.id();
    return emplace(std::move(out), tracked(s) || tracked(y),
                   [is, iy](Tape& t, const Tensor& g) {
                       Node& ns = t.nodes_[is];
                       Node& ny = t.nodes_[iy];
                       // z = V_y^T s: ds = V_y g, dy per row: c S^T G
                       if (ns.requires_grad) {
                           Tensor d = vtb_pairwise(g, ny.value, VtbKind::kBind);
                           reduce_rows_into(ns.grad, d);
                       }
                       if (ny.requires_grad) {
                           vtb_grad_y(ny.grad, g, ns.value, VtbKind::kUnbind);
                       }
                   });
}

// --- sampling -------------------------------------------------------------------

Value Tape::bernoulli(Value s, std::mt19937_64& rng, bool straight_through) {
    check_same_tape(s);
    const Tensor& ts = node(s).value;
    Tensor out(ts.shape());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = unit(rng) < ts[i] ? 1.0 : 0.0;
    }
    const std::size_t is = s.id();
    if (straight_through) {
        return emplace(std::move(out), tracked(s),
                       [is](Tape& t, const Tensor& g) { t.accumulate(is, g); });
    }
    Value v = emplace(std::move(out), tracked(s), [](Tape&, const Tensor&) {
        throw NonDifferentiablePathError(
            "backward reached a hard Bernoulli sample without straight-through");
    });
    node(v).poison = true;
    return v;
}

Value Tape::bernoulli_per_row(Value s, std::span<std::mt19937_64> rngs,
                              bool straight_through) {
    check_same_tape(s);
    const Tensor& ts = node(s).value;
    if (ts.rank() != 1 || ts.numel() != rngs.size()) {
        throw ShapeMismatchError("bernoulli_per_row: need one RNG stream per row");
    }
    Tensor out(ts.shape());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = unit(rngs[i]) < ts[i] ? 1.0 : 0.0;
    }
    const std::size_t is = s.id();
    if (straight_through) {
        return emplace(std::move(out), tracked(s),
                       [is](Tape& t, const Tensor& g) { t.accumulate(is, g); });
    }
    Value v = emplace(std::move(out), tracked(s), [](Tape&, const Tensor&) {
        throw NonDifferentiablePathError(
            "backward reached a hard Bernoulli sample without straight-through");
    });
    node(v).poison = true;
    return v;
}

double grad_check(const std::function<Value(Tape&, const std::vector<Value>&)>& f,
                  const std::vector<Tensor>& inputs, double eps) {
    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
    Value out = f(tape, leaves);
    if (out.val().numel() != 1) throw Error("grad_check: f must be scalar-valued");
    tape.backward(out);

    std::vector<Tensor> analytic;
    analytic.reserve(leaves.size());
    for (auto v : leaves) analytic.push_back(tape.grad(v));

    auto eval = [&](const std::vector<Tensor>& xs) {
        Tape t2;
        std::vector<Value> ls;
        ls.reserve(xs.size());
        for (const auto& x : xs) ls.push_back(t2.leaf(x, false));
        return f(t2, ls).val().data()[0];
    };

    double max_rel = 0.0;
    std::vector<Tensor> work = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t c = 0; c < inputs[i].numel(); ++c) {
            const double orig = work[i][c];
            work[i][c] = orig + eps;
            const double fp = eval(work);
            work[i][c] = orig - eps;
            const double fm = eval(work);
            work[i][c] = orig;
            const double cd = (fp - fm) / (2.0 * eps);
            const double an = analytic[i][c];
            const double denom = std::max({std::abs(an), std::abs(cd), 1e-8});
            max_rel = std::max(max_rel, std::abs(an - cd) / denom);
        }
    }
    return max_rel;
}

}  // namespace lznet::ad
