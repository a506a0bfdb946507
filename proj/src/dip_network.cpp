#include "wmevade/dip.hpp"

#include "wmevade/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace wmevade::dip {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Reflection about the edge sample (no edge repeat): -1 -> 1, n -> n-2.
inline int reflect(int i, int n) noexcept
{
    if (n == 1)
        return 0;
    if (i < 0)
        i = -i;
    if (i >= n)
        i = 2 * n - 2 - i;
    return i;
}

template <class T>
void leaky_forward(Tensor<T>& t, T slope)
{
    for (auto& v : t.data)
        v = v > T(0) ? v : slope * v;
}

// Multiplies the incoming gradient by the activation slope, read off the
// cached activation output (same sign as its input).
template <class T>
void leaky_backward(Tensor<T>& grad, const Tensor<T>& activated, T slope)
{
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (!(activated.data[i] > T(0)))
            grad.data[i] *= slope;
}

template <class T>
Tensor<T> upsample2(const Tensor<T>& x)
{
    Tensor<T> y(x.channels, x.height * 2, x.width * 2);
    for (int c = 0; c < x.channels; ++c)
        for (int yy = 0; yy < y.height; ++yy)
            for (int xx = 0; xx < y.width; ++xx)
                y.at(c, yy, xx) = x.at(c, yy / 2, xx / 2);
    return y;
}

template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& g)
{
    Tensor<T> x(g.channels, g.height / 2, g.width / 2);
    for (int c = 0; c < g.channels; ++c)
        for (int yy = 0; yy < g.height; ++yy)
            for (int xx = 0; xx < g.width; ++xx)
                x.at(c, yy / 2, xx / 2) += g.at(c, yy, xx);
    return x;
}

template <class T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b)
{
    Tensor<T> y(a.channels + b.channels, b.height, b.width);
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + a.data.size());
    return y;
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> split(const Tensor<T>& g, int first_channels)
{
    Tensor<T> a(first_channels, g.height, g.width), b(g.channels - first_channels, g.height, g.width);
    std::copy(g.data.begin(), g.data.begin() + a.data.size(), a.data.begin());
    std::copy(g.data.begin() + a.data.size(), g.data.end(), b.data.begin());
    return {std::move(a), std::move(b)};
}

template <class T>
void add_into(Tensor<T>& acc, const Tensor<T>& g)
{
    for (std::size_t i = 0; i < acc.data.size(); ++i)
        acc.data[i] += g.data[i];
}

}  // namespace

void NetConfig::validate() const
{
    if (depth < 1)
        throw std::invalid_argument("NetConfig: depth must be >= 1");
    if (channels < 1 || input_channels < 1 || output_channels < 1)
        throw std::invalid_argument("NetConfig: channel counts must be >= 1");
    if (skip_channels < 0)
        throw std::invalid_argument("NetConfig: skip_channels must be >= 0");
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0))
        throw std::invalid_argument("NetConfig: leaky_slope must lie in [0, 1)");
}

// --- Conv2d ----------------------------------------------------------------------------

template <class T>
Conv2d<T>::Conv2d(int in, int out, int k, int s, bool with_bias)
    : weight(out, in * k * k, 1), in_channels(in), out_channels(out), kernel(k), stride(s)
{
    weight.grad.assign(weight.size(), T(0));
    if (with_bias) {
        bias = Tensor<T>(out, 1, 1);
        bias.grad.assign(bias.size(), T(0));
    }
}

template <class T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x)
{
    if (x.channels != in_channels)
        throw std::invalid_argument("Conv2d: channel mismatch");
    const int pad = kernel / 2;
    in_h_ = x.height;
    in_w_ = x.width;
    out_h_ = (x.height + 2 * pad - kernel) / stride + 1;
    out_w_ = (x.width + 2 * pad - kernel) / stride + 1;
    const int kk = in_channels * kernel * kernel;
    const int hw = out_h_ * out_w_;

    cols_.resize(static_cast<std::size_t>(kk) * hw);
    for (int ci = 0; ci < in_channels; ++ci)
        for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) {
                T* row = cols_.data() + static_cast<std::size_t>((ci * kernel + ky) * kernel + kx) * hw;
                for (int oy = 0; oy < out_h_; ++oy) {
                    const int iy = reflect(oy * stride + ky - pad, in_h_);
                    const T* src = x.data.data() + ci * x.plane() + static_cast<std::size_t>(iy) * in_w_;
                    for (int ox = 0; ox < out_w_; ++ox)
                        row[oy * out_w_ + ox] = src[reflect(ox * stride + kx - pad, in_w_)];
                }
            }

    Tensor<T> y(out_channels, out_h_, out_w_);
    MatMap<T> ym(y.data.data(), out_channels, hw);
    ConstMatMap<T> wm(weight.data.data(), out_channels, kk);
    ConstMatMap<T> cm(cols_.data(), kk, hw);
    ym.noalias() = wm * cm;
    if (bias.size() != 0)
        for (int co = 0; co < out_channels; ++co)
            ym.row(co).array() += bias.data[co];
    return y;
}

template <class T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& g)
{
    if (cols_.empty())
        throw std::logic_error("Conv2d::backward called before forward");
    const int pad = kernel / 2;
    const int kk = in_channels * kernel * kernel;
    const int hw = out_h_ * out_w_;
    ConstMatMap<T> gm(g.data.data(), out_channels, hw);
    ConstMatMap<T> cm(cols_.data(), kk, hw);
    MatMap<T> gw(weight.grad.data(), out_channels, kk);
    gw.noalias() += gm * cm.transpose();
    if (bias.size() != 0)
        for (int co = 0; co < out_channels; ++co)
            bias.grad[co] += gm.row(co).sum();

    std::vector<T> dcols(static_cast<std::size_t>(kk) * hw);
    MatMap<T> dm(dcols.data(), kk, hw);
    ConstMatMap<T> wm(weight.data.data(), out_channels, kk);
    dm.noalias() = wm.transpose() * gm;

    Tensor<T> dx(in_channels, in_h_, in_w_);
    for (int ci = 0; ci < in_channels; ++ci)
        for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) {
                const T* row = dcols.data() + static_cast<std::size_t>((ci * kernel + ky) * kernel + kx) * hw;
                for (int oy = 0; oy < out_h_; ++oy) {
                    const int iy = reflect(oy * stride + ky - pad, in_h_);
                    T* dst = dx.data.data() + ci * dx.plane() + static_cast<std::size_t>(iy) * in_w_;
                    for (int ox = 0; ox < out_w_; ++ox)
                        dst[reflect(ox * stride + kx - pad, in_w_)] += row[oy * out_w_ + ox];
                }
            }
    return dx;
}

// --- BatchNorm --------------------------------------------------------------------------

template <class T>
BatchNorm<T>::BatchNorm(int channels) : gamma(channels, 1, 1, T(1)), beta(channels, 1, 1)
{
    gamma.grad.assign(gamma.size(), T(0));
    beta.grad.assign(beta.size(), T(0));
}

template <class T>
void BatchNorm<T>::forward(Tensor<T>& x)
{
    if (x.channels != gamma.channels)
        throw std::invalid_argument("BatchNorm: channel mismatch");
    height_ = x.height;
    width_ = x.width;
    const std::size_t n = x.plane();
    xhat_.resize(x.size());
    inv_std_.resize(x.channels);
    for (int c = 0; c < x.channels; ++c) {
        T* p = x.data.data() + c * n;
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            mean += p[i];
        mean /= double(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            var += (p[i] - mean) * (p[i] - mean);
        var /= double(n);
        const double inv = 1.0 / std::sqrt(var + kEps);
        inv_std_[c] = inv;
        T* xh = xhat_.data() + c * n;
        for (std::size_t i = 0; i < n; ++i) {
            xh[i] = static_cast<T>((p[i] - mean) * inv);
            p[i] = gamma.data[c] * xh[i] + beta.data[c];
        }
    }
}

template <class T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& g)
{
    if (xhat_.size() != g.size())
        throw std::logic_error("BatchNorm::backward called before forward");
    const std::size_t n = g.plane();
    Tensor<T> dx(g.channels, height_, width_);
    for (int c = 0; c < g.channels; ++c) {
        const T* gp = g.data.data() + c * n;
        const T* xh = xhat_.data() + c * n;
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_g += gp[i];
            sum_gx += double(gp[i]) * xh[i];
        }
        gamma.grad[c] += static_cast<T>(sum_gx);
        beta.grad[c] += static_cast<T>(sum_g);
        // d/dx of gamma * (x - mean) / std, folded over the shared mean and variance.
        const double k = gamma.data[c] * inv_std_[c] / double(n);
        T* d = dx.data.data() + c * n;
        for (std::size_t i = 0; i < n; ++i)
            d[i] = static_cast<T>(k * (double(n) * gp[i] - sum_g - xh[i] * sum_gx));
    }
    return dx;
}

// --- SkipNet ----------------------------------------------------------------------------

template <class T>
SkipNet<T>::SkipNet(const NetConfig& cfg, int height, int width) : cfg_(cfg), height_(height), width_(width)
{
    cfg.validate();
    const int scale = 1 << cfg.depth;
    if (height < scale || width < scale || height % scale || width % scale)
        throw ShapeError("SkipNet: image dimensions must be positive multiples of 2^depth");

    const int C = cfg.channels, S = cfg.skip_channels;
    int in = cfg.input_channels;
    levels_.resize(cfg.depth);
    for (auto& lv : levels_) {
        if (S > 0) {
            lv.skip = Conv2d<T>(in, S, 1, 1, false);
            lv.skip_bn = BatchNorm<T>(S);
        }
        lv.down = Conv2d<T>(in, C, 3, 2, false);
        lv.down_bn = BatchNorm<T>(C);
        lv.conv = Conv2d<T>(C, C, 3, 1, false);
        lv.conv_bn = BatchNorm<T>(C);
        lv.dec3 = Conv2d<T>(S + C, C, 3, 1, false);
        lv.dec3_bn = BatchNorm<T>(C);
        lv.dec1 = Conv2d<T>(C, C, 1, 1, false);
        lv.dec1_bn = BatchNorm<T>(C);
        in = C;
    }
    head_ = Conv2d<T>(C, cfg.output_channels, 1, 1);

    // Weights ~ U(-b, b), b = gain * sqrt(3 / fan_in), with the leaky-rectifier
    // gain sqrt(2 / (1 + slope^2)); the head bias starts at zero. Draw order:
    // conv weights in parameters() order, then the input.
    Rng rng(cfg.seed);
    const double gain = std::sqrt(2.0 / (1.0 + cfg.leaky_slope * cfg.leaky_slope));
    for (Conv2d<T>* c : convs()) {
        const double bound = gain * std::sqrt(3.0 / double(c->weight.height));
        for (auto& v : c->weight.data)
            v = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
    }
    z_ = Tensor<T>(cfg.input_channels, height, width);
    for (auto& v : z_.data)
        v = static_cast<T>(rng.normal());
}

template <class T>
std::vector<Conv2d<T>*> SkipNet<T>::convs()
{
    std::vector<Conv2d<T>*> cs;
    for (auto& lv : levels_)
        for (Conv2d<T>* c : {&lv.skip, &lv.down, &lv.conv, &lv.dec3, &lv.dec1})
            if (c->out_channels > 0)
                cs.push_back(c);
    cs.push_back(&head_);
    return cs;
}

template <class T>
std::vector<Tensor<T>*> SkipNet<T>::parameters()
{
    std::vector<Tensor<T>*> ps;
    for (auto& lv : levels_) {
        for (Conv2d<T>* c : {&lv.skip, &lv.down, &lv.conv, &lv.dec3, &lv.dec1})
            if (c->out_channels > 0)
                ps.push_back(&c->weight);
        for (BatchNorm<T>* b : {&lv.skip_bn, &lv.down_bn, &lv.conv_bn, &lv.dec3_bn, &lv.dec1_bn})
            if (b->gamma.size() > 0) {
                ps.push_back(&b->gamma);
                ps.push_back(&b->beta);
            }
    }
    ps.push_back(&head_.weight);
    ps.push_back(&head_.bias);
    return ps;
}

template <class T>
std::size_t SkipNet<T>::parameter_count()
{
    std::size_t n = 0;
    for (auto* p : parameters())
        n += p->size();
    return n;
}

template <class T>
void SkipNet<T>::zero_grad()
{
    for (auto* p : parameters())
        std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <class T>
const Tensor<T>& SkipNet<T>::forward()
{
    const T slope = static_cast<T>(cfg_.leaky_slope);
    const Tensor<T>* x = &z_;
    for (auto& lv : levels_) {
        if (cfg_.skip_channels > 0) {
            lv.skip_out = lv.skip.forward(*x);
            lv.skip_bn.forward(lv.skip_out);
            leaky_forward(lv.skip_out, slope);
        }
        lv.down_out = lv.down.forward(*x);
        lv.down_bn.forward(lv.down_out);
        leaky_forward(lv.down_out, slope);
        lv.level_out = lv.conv.forward(lv.down_out);
        lv.conv_bn.forward(lv.level_out);
        leaky_forward(lv.level_out, slope);
        x = &lv.level_out;
    }
    const Tensor<T>* y = &levels_.back().level_out;
    for (int i = cfg_.depth - 1; i >= 0; --i) {
        auto& lv = levels_[i];
        Tensor<T> up = upsample2(*y);
        Tensor<T> cat = cfg_.skip_channels > 0 ? concat(lv.skip_out, up) : std::move(up);
        lv.dec3_out = lv.dec3.forward(cat);
        lv.dec3_bn.forward(lv.dec3_out);
        leaky_forward(lv.dec3_out, slope);
        lv.dec_out = lv.dec1.forward(lv.dec3_out);
        lv.dec1_bn.forward(lv.dec_out);
        leaky_forward(lv.dec_out, slope);
        y = &lv.dec_out;
    }
    output_ = head_.forward(*y);
    for (auto& v : output_.data)
        v = T(1) / (T(1) + std::exp(-v));
    forward_done_ = true;
    return output_;
}

template <class T>
std::vector<bool> SkipNet<T>::rectifier_signs() const
{
    std::vector<bool> out;
    auto append = [&](const Tensor<T>& t) {
        for (T v : t.data)
            out.push_back(v > T(0));
    };
    for (const auto& lv : levels_) {
        append(lv.skip_out);
        append(lv.down_out);
        append(lv.level_out);
        append(lv.dec3_out);
        append(lv.dec_out);
    }
    return out;
}

template <class T>
void SkipNet<T>::backward(const Tensor<T>& grad_output)
{
    if (!forward_done_)
        throw std::logic_error("SkipNet::backward called before forward");
    if (grad_output.size() != output_.size())
        throw std::invalid_argument("SkipNet::backward: gradient shape mismatch");
    const T slope = static_cast<T>(cfg_.leaky_slope);

    Tensor<T> g = grad_output;
    for (std::size_t i = 0; i < g.data.size(); ++i)
        g.data[i] *= output_.data[i] * (T(1) - output_.data[i]);
    g = head_.backward(g);

    // Gradients flowing into each level's input from its skip branch.
    std::vector<Tensor<T>> skip_grads(cfg_.depth);
    for (int i = 0; i < cfg_.depth; ++i) {
        auto& lv = levels_[i];
        leaky_backward(g, lv.dec_out, slope);
        g = lv.dec1.backward(lv.dec1_bn.backward(g));
        leaky_backward(g, lv.dec3_out, slope);
        g = lv.dec3.backward(lv.dec3_bn.backward(g));
        if (cfg_.skip_channels > 0) {
            auto [gs, gu] = split(g, cfg_.skip_channels);
            leaky_backward(gs, lv.skip_out, slope);
            skip_grads[i] = lv.skip.backward(lv.skip_bn.backward(gs));
            g = upsample2_backward(gu);
        } else {
            g = upsample2_backward(g);
        }
    }
    // g is now dLoss/d(level_out of the deepest level).
    for (int i = cfg_.depth - 1; i >= 0; --i) {
        auto& lv = levels_[i];
        leaky_backward(g, lv.level_out, slope);
        g = lv.conv.backward(lv.conv_bn.backward(g));
        leaky_backward(g, lv.down_out, slope);
        g = lv.down.backward(lv.down_bn.backward(g));
        if (cfg_.skip_channels > 0)
            add_into(g, skip_grads[i]);
    }
    forward_done_ = false;
}

// --- Adam ---------------------------------------------------------------------------------

template <class T>
Adam<T>::Adam(std::vector<Tensor<T>*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg)
{
    for (auto* p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

template <class T>
void Adam<T>::step()
{
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = *params_[k];
        if (p.grad.size() != p.data.size())
            throw std::logic_error("Adam::step: parameter has no gradient");
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p.data[i] = static_cast<T>(p.data[i] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }
}

// --- helpers --------------------------------------------------------------------------------

template <class T>
double mse_loss(const Tensor<T>& output, const Tensor<T>& target, Tensor<T>* grad)
{
    if (output.size() != target.size() || output.size() == 0)
        throw std::invalid_argument("mse_loss: shape mismatch");
    const double n = double(output.size());
    double sum = 0.0;
    if (grad)
        *grad = Tensor<T>(output.channels, output.height, output.width);
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = double(output.data[i]) - double(target.data[i]);
        sum += d * d;
        if (grad)
            grad->data[i] = static_cast<T>(2.0 * d / n);
    }
    return sum / n;
}

template <class T>
Tensor<T> image_to_tensor(const ImageU8& img)
{
    Tensor<T> t(img.channels(), img.height(), img.width());
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                t.at(c, y, x) = static_cast<T>(img.at(y, x, c) / 255.0);
    return t;
}

template <class T>
ImageF tensor_to_image(const Tensor<T>& t)
{
    ImageF img(t.height, t.width, t.channels);
    for (int c = 0; c < t.channels; ++c)
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x)
                img.at(y, x, c) = static_cast<double>(t.at(c, y, x));
    return img;
}

#define WMEVADE_INSTANTIATE(T)                                                       \
    template class Conv2d<T>;                                                        \
    template class BatchNorm<T>;                                                     \
    template class SkipNet<T>;                                                       \
    template class Adam<T>;                                                          \
    template double mse_loss<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);     \
    template Tensor<T> image_to_tensor<T>(const ImageU8&);                           \
    template ImageF tensor_to_image<T>(const Tensor<T>&);

WMEVADE_INSTANTIATE(float)
WMEVADE_INSTANTIATE(double)

#undef WMEVADE_INSTANTIATE

}  // namespace wmevade::dip
