#include "sci/metrics.hpp"

#include <cmath>
#include <numeric>

namespace sci {

namespace {

void require_same(const ImageView& a, const ImageView& b, const char* what) {
  if (a.nx != b.nx || a.ny != b.ny)
    fail(ErrorKind::shape_mismatch, std::string(what) + ": frame shapes differ");
}

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> w{};
  const double sigma = 1.5;
  const int half = kSsimWindow / 2;
  double sum = 0.0;
  for (int k = 0; k < kSsimWindow; ++k) {
    const double d = k - half;
    w[k] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += w[k];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Valid-region separable filtering: out is (nx-10) x (ny-10).
std::vector<double> filter_valid(const std::vector<double>& in, std::size_t nx,
                                 std::size_t ny, const std::array<double, kSsimWindow>& w) {
  const std::size_t ox = nx - kSsimWindow + 1, oy = ny - kSsimWindow + 1;
  std::vector<double> rows(nx * oy);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < oy; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += w[k] * in[i * ny + j + k];
      rows[i * oy + j] = acc;
    }
  std::vector<double> out(ox * oy);
  for (std::size_t i = 0; i < ox; ++i)
    for (std::size_t j = 0; j < oy; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += w[k] * rows[(i + k) * oy + j];
      out[i * oy + j] = acc;
    }
  return out;
}

}  // namespace

double psnr(const ImageView& ref, const ImageView& test, double peak) {
  require_same(ref, test, "psnr");
  if (!(peak > 0.0)) fail(ErrorKind::invalid_argument, "psnr: peak must be > 0");
  double sse = 0.0;
  for (std::size_t k = 0; k < ref.values.size(); ++k) {
    const double d = ref.values[k] - test.values[k];
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrIdentical;
  const double mse = sse / static_cast<double>(ref.values.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const ImageView& ref, const ImageView& test, double peak) {
  require_same(ref, test, "ssim");
  if (ref.nx < kSsimWindow || ref.ny < kSsimWindow)
    fail(ErrorKind::invalid_argument, "ssim: frames must be at least 11x11");
  const auto w = gaussian_window();
  const std::size_t n = ref.values.size();
  std::vector<double> a(ref.values.begin(), ref.values.end());
  std::vector<double> b(test.values.begin(), test.values.end());
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t k = 0; k < n; ++k) {
    aa[k] = a[k] * a[k];
    bb[k] = b[k] * b[k];
    ab[k] = a[k] * b[k];
  }
  const auto mu_a = filter_valid(a, ref.nx, ref.ny, w);
  const auto mu_b = filter_valid(b, ref.nx, ref.ny, w);
  const auto e_aa = filter_valid(aa, ref.nx, ref.ny, w);
  const auto e_bb = filter_valid(bb, ref.nx, ref.ny, w);
  const auto e_ab = filter_valid(ab, ref.nx, ref.ny, w);

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  for (std::size_t k = 0; k < mu_a.size(); ++k) {
    const double ma = mu_a[k], mb = mu_b[k];
    const double va = e_aa[k] - ma * ma;
    const double vb = e_bb[k] - mb * mb;
    const double cov = e_ab[k] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

namespace {

void finish(MetricReport& r) {
  const double frames = static_cast<double>(r.psnr.size());
  r.mean_psnr = std::accumulate(r.psnr.begin(), r.psnr.end(), 0.0) / frames;
  r.mean_ssim = std::accumulate(r.ssim.begin(), r.ssim.end(), 0.0) / frames;
}

bool ssim_defined(const Dims& d) { return d.nx >= kSsimWindow && d.ny >= kSsimWindow; }

}  // namespace

MetricReport video_metrics(const VideoCube& ref, const VideoCube& test) {
  if (!ref.same_shape(test))
    fail(ErrorKind::shape_mismatch, "video_metrics: " + to_string(ref.dims()) + " vs " +
                                        to_string(test.dims()));
  MetricReport r;
  const std::size_t frames = ref.frames();
  r.psnr.resize(frames);
  r.ssim.resize(frames);
  const bool with_ssim = ssim_defined(ref.dims());
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(frames); ++b) {
    r.psnr[b] = psnr(ref.frame_view(b), test.frame_view(b));
    r.ssim[b] = with_ssim ? ssim(ref.frame_view(b), test.frame_view(b)) : std::nan("");
  }
  finish(r);
  return r;
}

MetricReport video_metrics(const ColorVideoCube& ref, const ColorVideoCube& test) {
  if (!ref.same_shape(test))
    fail(ErrorKind::shape_mismatch, "video_metrics: " + to_string(ref.dims()) + " vs " +
                                        to_string(test.dims()));
  MetricReport r;
  r.color_convention = kColorMetricConvention;
  const std::size_t frames = ref.frames();
  r.psnr.resize(frames);
  r.ssim.resize(frames);
  const bool with_ssim = ssim_defined(ref.dims());
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(frames); ++b) {
    double p = 0.0, s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const ImageView rv{ref.plane(c, b), ref.nx(), ref.ny()};
      const ImageView tv{test.plane(c, b), test.nx(), test.ny()};
      p += psnr(rv, tv);
      s += with_ssim ? ssim(rv, tv) : std::nan("");
    }
    r.psnr[b] = p / 3.0;
    r.ssim[b] = s / 3.0;
  }
  finish(r);
  return r;
}

double mean_psnr(const VideoCube& ref, const VideoCube& test) {
  if (!ref.same_shape(test)) fail(ErrorKind::shape_mismatch, "mean_psnr: shapes differ");
  double sum = 0.0;
  for (std::size_t b = 0; b < ref.frames(); ++b) sum += psnr(ref.frame_view(b), test.frame_view(b));
  return sum / static_cast<double>(ref.frames());
}

}  // namespace sci
