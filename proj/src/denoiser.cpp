#include "ansfield/denoiser.hpp"

#include <cmath>
#include <mutex>
#include <random>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "ansfield/errors.hpp"
#include "conv_ops.hpp"

namespace ansfield {

using detail::ConstMatMap;
using detail::Extent;
using detail::Mat;
using detail::MatMap;

// --- ParameterSet ----------------------------------------------------------

void ParameterSet::add(std::string name, ValueArray value) {
    if (contains(name)) throw InvalidArgument("duplicate parameter " + name);
    entries_.push_back({std::move(name), std::move(value)});
}

ValueArray& ParameterSet::get(const std::string& name) {
    for (auto& e : entries_) {
        if (e.name == name) return e.value;
    }
    throw InvalidArgument("no parameter named " + name);
}

const ValueArray& ParameterSet::get(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->get(name);
}

bool ParameterSet::contains(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

std::size_t ParameterSet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

bool ParameterSet::all_finite() const {
    for (const auto& e : entries_) {
        if (!e.value.all_finite()) return false;
    }
    return true;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out;
    for (const auto& e : entries_) out.add(e.name, ValueArray(e.value.shape()));
    return out;
}

void ParameterSet::accumulate(const ParameterSet& other) {
    if (other.entries_.size() != entries_.size()) throw ShapeMismatch("parameter sets differ in length");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto& a = entries_[i].value;
        const auto& b = other.entries_[i].value;
        if (a.shape() != b.shape()) throw ShapeMismatch("parameter " + entries_[i].name);
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    }
}

void ParameterSet::scale(double s) {
    for (auto& e : entries_) {
        for (auto& v : e.value.values()) v *= s;
    }
}

// --- layout ----------------------------------------------------------------

namespace {

struct Layout {
    std::vector<std::pair<std::string, ValueArray::Shape>> shapes;
};

Layout layout(const DenoiserConfig& c) {
    const std::size_t c0 = c.widths[0], c1 = c.widths[1], c2 = c.widths[2];
    const std::size_t d = c.time_dim;
    const std::size_t in = 1 + c.image_channels;
    return {{
        {"enc1.w", {c0, in, 3, 3}},     {"enc1.b", {c0}},
        {"enc2.w", {c1, c0, 3, 3}},     {"enc2.b", {c1}},
        {"enc3.w", {c2, c1, 3, 3}},     {"enc3.b", {c2}},
        {"time1.w", {c0, d}},           {"time2.w", {c1, d}},
        {"time3.w", {c2, d}},           {"text.emb", {static_cast<std::size_t>(c.text_tokens) + 1, c2}},
        {"mid.w", {c2, c2, 3, 3}},      {"mid.b", {c2}},
        {"up2.w", {c2, c1, 3, 3}},      {"up2.b", {c1}},
        {"dec2.w", {c1, 2 * c1, 3, 3}}, {"dec2.b", {c1}},
        {"up1.w", {c1, c0, 3, 3}},      {"up1.b", {c0}},
        {"dec1.w", {c0, 2 * c0, 3, 3}}, {"dec1.b", {c0}},
        {"out.w", {1, c0, 3, 3}},       {"out.b", {1}},
    }};
}

ConstMatMap view(const ValueArray& a) {
    const auto rows = static_cast<Eigen::Index>(a.dim(0));
    return ConstMatMap(a.data(), rows, static_cast<Eigen::Index>(a.size()) / rows);
}

MatMap view(ValueArray& a) {
    const auto rows = static_cast<Eigen::Index>(a.dim(0));
    return MatMap(a.data(), rows, static_cast<Eigen::Index>(a.size()) / rows);
}

// a(c, b·hw + p) += add(c, b)
void add_per_item(Mat& a, const Mat& add, int hw) {
    for (Eigen::Index c = 0; c < a.rows(); ++c) {
        for (Eigen::Index b = 0; b < add.cols(); ++b) a.row(c).segment(b * hw, hw).array() += add(c, b);
    }
}

// Sum of a(c, b·hw + p) over p.
Mat sum_per_item(const Mat& a, int hw, int batch) {
    Mat out(a.rows(), batch);
    for (Eigen::Index c = 0; c < a.rows(); ++c) {
        for (int b = 0; b < batch; ++b) out(c, b) = a.row(c).segment(static_cast<Eigen::Index>(b) * hw, hw).sum();
    }
    return out;
}

Mat stack(const Mat& top, const Mat& bottom) {
    Mat out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

}  // namespace

struct DenoiserTrace::Impl {
    Extent l1, l2, l3;
    Mat emb;  // [time_dim, B]
    std::vector<TokenIds> tokens;
    Mat x0, a1, e1, a2, e2, a3, e3, a4, m, a5, c2, a6, d2, a7, c1, a8, d1;
};

DenoiserTrace::DenoiserTrace() : impl_(std::make_unique<Impl>()) {}
DenoiserTrace::~DenoiserTrace() = default;
DenoiserTrace::DenoiserTrace(DenoiserTrace&&) noexcept = default;
DenoiserTrace& DenoiserTrace::operator=(DenoiserTrace&&) noexcept = default;

std::vector<double> timestep_embedding(int t, int dim) {
    std::vector<double> e(dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        e[i] = std::sin(t * freq);
        e[half + i] = std::cos(t * freq);
    }
    return e;
}

// --- Denoiser ----------------------------------------------------------------

namespace {

// Activation buffers run to tens of MB; keep glibc from mmap/munmap-ing them on
// every call, which otherwise dominates training time in page faults.
void keep_large_blocks() {
#if defined(__GLIBC__)
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 512 << 20);
        mallopt(M_TRIM_THRESHOLD, 1024 << 20);
    });
#endif
}

}  // namespace

Denoiser::Denoiser(DenoiserConfig config, DenoiserParams params) : config_(config), params_(std::move(params)) {
    validate();
}

DenoiserParams Denoiser::zero_params(const DenoiserConfig& config) {
    DenoiserParams p;
    for (const auto& [name, shape] : layout(config).shapes) p.add(name, ValueArray(shape));
    return p;
}

Denoiser Denoiser::initialize(const DenoiserConfig& config, std::uint64_t seed) {
    DenoiserParams p = zero_params(config);
    std::mt19937_64 rng(seed);
    for (auto& [name, value] : p.entries()) {
        if (name.ends_with(".b")) continue;
        double stddev = 0.0;
        if (name == "text.emb") {
            stddev = 0.1;
        } else if (name.starts_with("time")) {
            stddev = std::sqrt(1.0 / static_cast<double>(value.dim(1)));
        } else if (name.starts_with("up")) {
            // Transposed conv: each output pixel sees ~9/4 taps per input channel.
            stddev = std::sqrt(1.0 / (2.25 * static_cast<double>(value.dim(0))));
        } else {
            stddev = std::sqrt(1.0 / static_cast<double>(value.dim(1) * 9));
        }
        std::normal_distribution<double> n(0.0, stddev);
        for (auto& v : value.values()) v = n(rng);
    }
    return Denoiser(config, std::move(p));
}

void Denoiser::validate() const {
    const auto expected = layout(config_).shapes;
    if (params_.entries().size() != expected.size()) throw ShapeMismatch("denoiser parameter count");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& e = params_.entries()[i];
        if (e.name != expected[i].first || e.value.shape() != expected[i].second) {
            throw ShapeMismatch("parameter " + expected[i].first + " expected shape mismatch (got " + e.name + " " +
                                e.value.shape_string() + ")");
        }
    }
    if (!params_.all_finite()) throw NonFiniteInput("non-finite denoiser parameters");
}

ValueArray Denoiser::predict(const ValueArray& z_t, std::span<const int> t, const ValueArray* cond_img,
                             const std::vector<TokenIds>* cond_text) const {
    return forward(z_t, t, cond_img, cond_text, nullptr);
}

ValueArray Denoiser::forward(const ValueArray& z_t, std::span<const int> t, const ValueArray* cond_img,
                             const std::vector<TokenIds>* cond_text, DenoiserTrace* trace) const {
    if (z_t.rank() != 4 || z_t.dim(1) != 1) throw ShapeMismatch("z_t must be [B,1,H,W], got " + z_t.shape_string());
    const int batch = static_cast<int>(z_t.dim(0));
    const int height = static_cast<int>(z_t.dim(2));
    const int width = static_cast<int>(z_t.dim(3));
    if (height % 4 != 0 || width % 4 != 0) throw ShapeMismatch("H and W must be divisible by 4");
    if (static_cast<int>(t.size()) != batch) throw ShapeMismatch("one timestep per batch item required");
    const int ci = config_.image_channels;
    if (cond_img && cond_img->shape() != ValueArray::Shape{z_t.dim(0), static_cast<std::size_t>(ci), z_t.dim(2),
                                                           z_t.dim(3)}) {
        throw ShapeMismatch("cond_img must be [B," + std::to_string(ci) + ",H,W], got " + cond_img->shape_string());
    }
    if (cond_text && static_cast<int>(cond_text->size()) != batch) throw ShapeMismatch("one token list per item");
    if (!z_t.all_finite() || (cond_img && !cond_img->all_finite())) throw NonFiniteInput("denoiser input");

    keep_large_blocks();
    DenoiserTrace local;
    DenoiserTrace::Impl& s = trace ? trace->impl() : local.impl();
    s.l1 = {batch, height, width};
    s.l2 = detail::conv_output(s.l1, 2);
    s.l3 = detail::conv_output(s.l2, 2);
    const int hw1 = height * width;
    const int hw2 = s.l2.height * s.l2.width;
    const int hw3 = s.l3.height * s.l3.width;

    s.x0 = Mat::Zero(1 + ci, s.l1.pixels());
    s.x0.row(0) = ConstMatMap(z_t.data(), 1, s.l1.pixels());
    if (cond_img) {
        for (int b = 0; b < batch; ++b) {
            for (int c = 0; c < ci; ++c) {
                const double* src = cond_img->data() + (static_cast<std::size_t>(b) * ci + c) * hw1;
                s.x0.row(1 + c).segment(static_cast<Eigen::Index>(b) * hw1, hw1) =
                    Eigen::Map<const Eigen::RowVectorXd>(src, hw1);
            }
        }
    }

    s.emb.resize(config_.time_dim, batch);
    for (int b = 0; b < batch; ++b) {
        const auto e = timestep_embedding(t[b], config_.time_dim);
        for (int i = 0; i < config_.time_dim; ++i) s.emb(i, b) = e[i];
    }
    const int null_row = config_.text_tokens;
    s.tokens.assign(batch, TokenIds{});
    if (cond_text) {
        for (int b = 0; b < batch; ++b) {
            for (int tok : (*cond_text)[b]) {
                if (tok < 0 || tok >= config_.text_tokens) throw InvalidArgument("text token out of range");
            }
            s.tokens[b] = (*cond_text)[b];
        }
    }
    const ConstMatMap text_table = view(params_.get("text.emb"));
    Mat text(config_.widths[2], batch);
    for (int b = 0; b < batch; ++b) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(config_.widths[2]);
        if (s.tokens[b].empty()) {
            row = text_table.row(null_row);
        } else {
            for (int tok : s.tokens[b]) row += text_table.row(tok);
        }
        text.col(b) = row.transpose();
    }

    auto w = [&](const char* name) { return view(params_.get(name)); };
    auto bias = [&](const char* name) { return params_.get(name).data(); };

    s.a1 = detail::conv_forward(s.x0, s.l1, w("enc1.w"), bias("enc1.b"), 1);
    add_per_item(s.a1, w("time1.w") * s.emb, hw1);
    s.e1 = detail::silu(s.a1);

    s.a2 = detail::conv_forward(s.e1, s.l1, w("enc2.w"), bias("enc2.b"), 2);
    add_per_item(s.a2, w("time2.w") * s.emb, hw2);
    s.e2 = detail::silu(s.a2);

    s.a3 = detail::conv_forward(s.e2, s.l2, w("enc3.w"), bias("enc3.b"), 2);
    add_per_item(s.a3, Mat(w("time3.w") * s.emb + text), hw3);
    s.e3 = detail::silu(s.a3);

    s.a4 = detail::conv_forward(s.e3, s.l3, w("mid.w"), bias("mid.b"), 1);
    s.m = s.e3 + detail::silu(s.a4);

    s.a5 = detail::conv_transpose_forward(s.m, s.l2, w("up2.w"), bias("up2.b"), 2);
    s.c2 = stack(detail::silu(s.a5), s.e2);
    s.a6 = detail::conv_forward(s.c2, s.l2, w("dec2.w"), bias("dec2.b"), 1);
    s.d2 = detail::silu(s.a6);

    s.a7 = detail::conv_transpose_forward(s.d2, s.l1, w("up1.w"), bias("up1.b"), 2);
    s.c1 = stack(detail::silu(s.a7), s.e1);
    s.a8 = detail::conv_forward(s.c1, s.l1, w("dec1.w"), bias("dec1.b"), 1);
    s.d1 = detail::silu(s.a8);

    const Mat out = detail::conv_forward(s.d1, s.l1, w("out.w"), bias("out.b"), 1);
    ValueArray result(z_t.shape());
    MatMap(result.data(), 1, s.l1.pixels()) = out;
    return result;
}

DenoiserParams Denoiser::backward(const DenoiserTrace& trace, const ValueArray& d_out) const {
    const DenoiserTrace::Impl& s = trace.impl();
    if (static_cast<int>(d_out.size()) != s.l1.pixels()) throw ShapeMismatch("d_out does not match the traced output");
    DenoiserParams g = params_.zeros_like();
    const int batch = s.l1.batch;
    const int hw1 = s.l1.height * s.l1.width;
    const int hw2 = s.l2.height * s.l2.width;
    const int hw3 = s.l3.height * s.l3.width;
    auto w = [&](const char* name) { return view(params_.get(name)); };
    auto gw = [&](const char* name) { return view(g.get(name)); };
    auto gb = [&](const char* name) { return g.get(name).data(); };

    const Mat dout = ConstMatMap(d_out.data(), 1, s.l1.pixels());
    const Mat dd1 = detail::conv_backward(s.d1, s.l1, w("out.w"), dout, 1, gw("out.w"), gb("out.b"));
    const Mat da8 = detail::silu_backward(s.a8, dd1);
    const Mat dc1 = detail::conv_backward(s.c1, s.l1, w("dec1.w"), da8, 1, gw("dec1.w"), gb("dec1.b"));
    const int c0 = config_.widths[0];
    const int c1 = config_.widths[1];
    const Mat da7 = detail::silu_backward(s.a7, dc1.topRows(c0));
    Mat de1 = dc1.bottomRows(c0);

    const Mat dd2 = detail::conv_transpose_backward(s.d2, s.l1, w("up1.w"), da7, 2, gw("up1.w"), gb("up1.b"));
    const Mat da6 = detail::silu_backward(s.a6, dd2);
    const Mat dc2 = detail::conv_backward(s.c2, s.l2, w("dec2.w"), da6, 1, gw("dec2.w"), gb("dec2.b"));
    const Mat da5 = detail::silu_backward(s.a5, dc2.topRows(c1));
    Mat de2 = dc2.bottomRows(c1);

    const Mat dm = detail::conv_transpose_backward(s.m, s.l2, w("up2.w"), da5, 2, gw("up2.w"), gb("up2.b"));
    const Mat da4 = detail::silu_backward(s.a4, dm);
    Mat de3 = dm + detail::conv_backward(s.e3, s.l3, w("mid.w"), da4, 1, gw("mid.w"), gb("mid.b"));

    const Mat da3 = detail::silu_backward(s.a3, de3);
    const Mat dadd3 = sum_per_item(da3, hw3, batch);
    gw("time3.w").noalias() += dadd3 * s.emb.transpose();
    MatMap dtext = gw("text.emb");
    for (int b = 0; b < batch; ++b) {
        if (s.tokens[b].empty()) {
            dtext.row(config_.text_tokens) += dadd3.col(b).transpose();
        } else {
            for (int tok : s.tokens[b]) dtext.row(tok) += dadd3.col(b).transpose();
        }
    }
    de2 += detail::conv_backward(s.e2, s.l2, w("enc3.w"), da3, 2, gw("enc3.w"), gb("enc3.b"));

    const Mat da2 = detail::silu_backward(s.a2, de2);
    gw("time2.w").noalias() += sum_per_item(da2, hw2, batch) * s.emb.transpose();
    de1 += detail::conv_backward(s.e1, s.l1, w("enc2.w"), da2, 2, gw("enc2.w"), gb("enc2.b"));

    const Mat da1 = detail::silu_backward(s.a1, de1);
    gw("time1.w").noalias() += sum_per_item(da1, hw1, batch) * s.emb.transpose();
    detail::conv_backward(s.x0, s.l1, w("enc1.w"), da1, 1, gw("enc1.w"), gb("enc1.b"));
    return g;
}

}  // namespace ansfield
