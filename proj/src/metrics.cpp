#include "codkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "codkit/image_io.hpp"
#include "codkit/ops.hpp"

namespace codkit {

namespace {
constexpr double kEps = 2.220446049250313e-16;
}

double mae(const Tensor& p, const Tensor& g) {
    require_same_shape(p, g, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - g[i]);
    return acc / static_cast<double>(p.size());
}

// ---- S-measure ----

namespace {

// similarity of the region-restricted prediction to the region's ideal value
double object_term(const Tensor& p, const std::vector<char>& gt, bool fg) {
    double sum = 0.0;
    long long n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (static_cast<bool>(gt[i]) != fg) continue;
        sum += fg ? p[i] : 1.0 - p[i];
        ++n;
    }
    if (n == 0) return 0.0;
    const double x = sum / n;
    double var = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (static_cast<bool>(gt[i]) != fg) continue;
        const double d = (fg ? p[i] : 1.0 - p[i]) - x;
        var += d * d;
    }
    const double sigma = std::sqrt(var / n);
    return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

double ssim_block(const Tensor& p, const std::vector<char>& gt, int w, int y0, int y1, int x0,
                  int x1) {
    const long long n = static_cast<long long>(y1 - y0) * (x1 - x0);
    if (n <= 0) return 0.0;
    double sx = 0.0, sy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            sx += p[i];
            sy += gt[i];
        }
    const double mx = sx / n, my = sy / n;
    double vx = 0.0, vy = 0.0, vxy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double dx = p[i] - mx, dy = gt[i] - my;
            vx += dx * dx;
            vy += dy * dy;
            vxy += dx * dy;
        }
    vx /= n - 1 + kEps;
    vy /= n - 1 + kEps;
    vxy /= n - 1 + kEps;
    const double num = 4.0 * mx * my * vxy;
    const double den = (mx * mx + my * my) * (vx + vy);
    if (num != 0.0) return num / (den + kEps);
    return den == 0.0 ? 1.0 : 0.0;
}

}  // namespace

double s_measure(const Tensor& p, const Tensor& g, double alpha) {
    require_same_shape(p, g, "s_measure");
    const int rows = g.height(), cols = g.width();
    std::vector<char> gt(g.size());
    long long fg_n = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        gt[i] = g[i] > 0.5f ? 1 : 0;
        fg_n += gt[i];
    }
    double pmean = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) pmean += p[i];
    pmean /= static_cast<double>(p.size());
    if (fg_n == 0) return 1.0 - pmean;
    if (fg_n == static_cast<long long>(g.size())) return pmean;

    const double u = static_cast<double>(fg_n) / static_cast<double>(g.size());
    const double s_obj = u * object_term(p, gt, true) + (1.0 - u) * object_term(p, gt, false);

    // centroid of the ground truth, 1-based with half-away-from-zero rounding
    double cx = 0.0, cy = 0.0;
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x)
            if (gt[static_cast<std::size_t>(y) * cols + x]) {
                cx += x + 1;
                cy += y + 1;
            }
    const int X = static_cast<int>(std::lround(cx / static_cast<double>(fg_n)));
    const int Y = static_cast<int>(std::lround(cy / static_cast<double>(fg_n)));
    const double area = static_cast<double>(rows) * cols;
    const double w1 = static_cast<double>(X) * Y / area;
    const double w2 = static_cast<double>(cols - X) * Y / area;
    const double w3 = static_cast<double>(X) * (rows - Y) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    const double s_reg = w1 * ssim_block(p, gt, cols, 0, Y, 0, X) +
                         w2 * ssim_block(p, gt, cols, 0, Y, X, cols) +
                         w3 * ssim_block(p, gt, cols, Y, rows, 0, X) +
                         w4 * ssim_block(p, gt, cols, Y, rows, X, cols);
    return std::max(alpha * s_obj + (1.0 - alpha) * s_reg, 0.0);
}

// ---- mean E-measure ----

double e_measure_mean(const Tensor& p, const Tensor& g) {
    require_same_shape(p, g, "e_measure_mean");
    const long long n = static_cast<long long>(p.size());
    long long gt_fg = 0;
    std::vector<char> gt(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        gt[i] = g[i] > 0.5f ? 1 : 0;
        gt_fg += gt[i];
    }

    // Thresholds sit at the centers of 256 uniform bins of [0,1], so a binary
    // map binarizes to itself at every level. Per pixel, find the largest
    // threshold index it still clears (-1 if none); bucketing reduces each
    // threshold to four counts instead of a pixel sweep.
    long long hist_fg[257] = {0}, hist_bg[257] = {0};  // slot 0 holds "clears none"
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double v = p[i];
        int lo = -1, hi = 255;
        while (lo < hi) {
            const int mid = (lo + hi + 1) / 2;
            if (v >= (static_cast<double>(mid) + 0.5) / 256.0)
                lo = mid;
            else
                hi = mid - 1;
        }
        (gt[i] ? hist_fg : hist_bg)[lo + 1] += 1;
    }
    long long cum_fg = 0, cum_bg = 0;
    double acc = 0.0;
    double em_by_t[256];
    for (int t = 255; t >= 0; --t) {
        cum_fg += hist_fg[t + 1];
        cum_bg += hist_bg[t + 1];
        const long long fg_fg = cum_fg, fg_bg = cum_bg;
        const long long pred_fg = fg_fg + fg_bg;
        double enhanced_sum;
        if (gt_fg == 0) {
            enhanced_sum = static_cast<double>(n - pred_fg);
        } else if (gt_fg == n) {
            enhanced_sum = static_cast<double>(pred_fg);
        } else {
            const long long bg_fg = gt_fg - fg_fg;
            const long long bg_bg = (n - pred_fg) - bg_fg;
            const double mu_fm = static_cast<double>(pred_fg) / n;
            const double mu_gt = static_cast<double>(gt_fg) / n;
            const double parts[4][3] = {
                {1.0 - mu_fm, 1.0 - mu_gt, static_cast<double>(fg_fg)},
                {1.0 - mu_fm, 0.0 - mu_gt, static_cast<double>(fg_bg)},
                {0.0 - mu_fm, 1.0 - mu_gt, static_cast<double>(bg_fg)},
                {0.0 - mu_fm, 0.0 - mu_gt, static_cast<double>(bg_bg)},
            };
            enhanced_sum = 0.0;
            for (const auto& part : parts) {
                const double align = 2.0 * part[0] * part[1] /
                                     (part[0] * part[0] + part[1] * part[1] + kEps);
                enhanced_sum += (align + 1.0) * (align + 1.0) / 4.0 * part[2];
            }
        }
        em_by_t[t] = enhanced_sum / static_cast<double>(n);
    }
    for (int t = 0; t < 256; ++t) acc += em_by_t[t];
    return acc / 256.0;
}

// ---- weighted F-measure ----

double weighted_f(const Tensor& p, const Tensor& g, double beta2) {
    require_same_shape(p, g, "weighted_f");
    const int h = p.height(), w = p.width();
    const std::size_t n = p.size();
    std::vector<char> gt(n);
    std::vector<int> fg_pixels;
    for (std::size_t i = 0; i < n; ++i) {
        gt[i] = g[i] > 0.5f ? 1 : 0;
        if (gt[i]) fg_pixels.push_back(static_cast<int>(i));
    }
    if (fg_pixels.empty()) throw EmptyGroundTruth("weighted_f");

    // distance and nearest-foreground index; ties resolve to the smallest
    // row-major index, the convention shared with the reference route
    std::vector<double> dist(n, 0.0);
    std::vector<int> nearest(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        if (gt[i]) {
            nearest[i] = static_cast<int>(i);
            continue;
        }
        const int y = static_cast<int>(i / w), x = static_cast<int>(i % w);
        long long best = -1;
        int best_j = 0;
        for (int j : fg_pixels) {
            const int jy = j / w, jx = j % w;
            const long long d2 = static_cast<long long>(jy - y) * (jy - y) +
                                 static_cast<long long>(jx - x) * (jx - x);
            if (best < 0 || d2 < best) {
                best = d2;
                best_j = j;
            }
        }
        dist[i] = std::sqrt(static_cast<double>(best));
        nearest[i] = best_j;
    }

    std::vector<double> err(n), err_t(n);
    for (std::size_t i = 0; i < n; ++i) err[i] = std::abs(static_cast<double>(p[i]) - gt[i]);
    for (std::size_t i = 0; i < n; ++i) err_t[i] = gt[i] ? err[i] : err[nearest[i]];

    // separable normalized Gaussian (window 7, sigma 5), zero padding
    double taps[7];
    double tsum = 0.0;
    for (int t = 0; t < 7; ++t) {
        taps[t] = std::exp(-(t - 3.0) * (t - 3.0) / 50.0);
        tsum += taps[t];
    }
    for (double& t : taps) t /= tsum;
    std::vector<double> blur_x(n, 0.0), blurred(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -3; t <= 3; ++t) {
                const int ix = x + t;
                if (ix < 0 || ix >= w) continue;
                acc += taps[t + 3] * err_t[static_cast<std::size_t>(y) * w + ix];
            }
            blur_x[static_cast<std::size_t>(y) * w + x] = acc;
        }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -3; t <= 3; ++t) {
                const int iy = y + t;
                if (iy < 0 || iy >= h) continue;
                acc += taps[t + 3] * blur_x[static_cast<std::size_t>(iy) * w + x];
            }
            blurred[static_cast<std::size_t>(y) * w + x] = acc;
        }

    const double decay = std::log(0.5) / 5.0;
    double ew_fg = 0.0, ew_bg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ew = gt[i] ? std::min(err[i], blurred[i])
                                : err[i] * (2.0 - std::exp(decay * dist[i]));
        (gt[i] ? ew_fg : ew_bg) += ew;
    }
    const double fg_count = static_cast<double>(fg_pixels.size());
    const double tpw = fg_count - ew_fg;
    const double recall = 1.0 - ew_fg / fg_count;
    const double precision = tpw / (kEps + tpw + ew_bg);
    return (1.0 + beta2) * precision * recall / (kEps + recall + beta2 * precision);
}

// ---- dataset evaluation ----

MetricReport evaluate_dataset(const std::string& pred_dir, const std::string& gt_dir) {
    namespace fs = std::filesystem;
    MetricReport report;

    auto list_files = [](const std::string& dir) {
        std::set<std::string> names;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file()) names.insert(entry.path().filename().string());
        return names;
    };
    const std::set<std::string> preds = list_files(pred_dir);
    const std::set<std::string> gts = list_files(gt_dir);

    std::vector<std::string> matched;
    for (const auto& name : preds) {
        if (gts.count(name))
            matched.push_back(name);
        else
            report.missing.push_back(pred_dir + "/" + name + " (no ground truth)");
    }
    for (const auto& name : gts)
        if (!preds.count(name)) report.missing.push_back(gt_dir + "/" + name + " (no prediction)");

    report.per_image.resize(matched.size());
    std::vector<char> failed(matched.size(), 0);
    std::vector<std::string> fail_msg(matched.size());

#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(matched.size()); ++i) {
        PerImageMetrics& m = report.per_image[i];
        m.id = matched[i];
        try {
            Tensor pred = load_image_gray(pred_dir + "/" + matched[i]);
            Tensor gt_img = load_image_gray(gt_dir + "/" + matched[i]);
            if (!pred.same_shape(gt_img))
                pred = resize_bilinear(pred, gt_img.height(), gt_img.width());
            pred = min_max_normalize(pred);
            Tensor gt(1, gt_img.height(), gt_img.width());
            for (std::size_t j = 0; j < gt.size(); ++j) gt[j] = gt_img[j] > 0.5f ? 1.0f : 0.0f;

            m.mae = mae(pred, gt);
            m.s_measure = s_measure(pred, gt);
            m.e_measure = e_measure_mean(pred, gt);
            try {
                m.weighted_f = weighted_f(pred, gt);
            } catch (const EmptyGroundTruth&) {
                m.weighted_f = std::nullopt;  // skip, not a failure
            }
        } catch (const std::exception& e) {
            failed[i] = 1;
            fail_msg[i] = matched[i] + ": " + e.what();
        }
    }

    // drop failed entries, keep deterministic order
    std::vector<PerImageMetrics> kept;
    for (std::size_t i = 0; i < matched.size(); ++i) {
        if (failed[i]) {
            report.unreadable.push_back(fail_msg[i]);
        } else {
            kept.push_back(std::move(report.per_image[i]));
        }
    }
    report.per_image = std::move(kept);
    report.n_images = static_cast<int>(report.per_image.size());

    double ss = 0.0, se = 0.0, sf = 0.0, sm = 0.0;
    int nf = 0;
    for (const auto& m : report.per_image) {
        ss += m.s_measure;
        se += m.e_measure;
        sm += m.mae;
        if (m.weighted_f) {
            sf += *m.weighted_f;
            ++nf;
        }
    }
    if (report.n_images > 0) {
        report.agg_s = ss / report.n_images;
        report.agg_e = se / report.n_images;
        report.agg_mae = sm / report.n_images;
    }
    report.n_f_scored = nf;
    if (nf > 0) report.agg_f = sf / nf;
    return report;
}

}  // namespace codkit
