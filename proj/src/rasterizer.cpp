#include "cnp/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnp {

namespace {

double clampd(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Brush alpha and its gradient at continuous grid coordinates. Texels
// outside the grid read as 0, so strokes may leave the frame freely.
struct Sampled {
  double alpha = 0.0;
  double d_gx = 0.0;
  double d_gy = 0.0;
};

Sampled sample_brush(const ImageBuffer& alpha, double gx, double gy) {
  const int n = alpha.width;
  if (gx <= -1.0 || gy <= -1.0 || gx >= n || gy >= n) return {};
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const double fx = gx - x0;
  const double fy = gy - y0;
  auto texel = [&alpha, n](int x, int y) {
    if (x < 0 || y < 0 || x >= n || y >= n) return 0.0;
    return alpha.at(x, y, 0);
  };
  const double b00 = texel(x0, y0);
  const double b10 = texel(x0 + 1, y0);
  const double b01 = texel(x0, y0 + 1);
  const double b11 = texel(x0 + 1, y0 + 1);
  Sampled s;
  s.alpha = (1.0 - fx) * (1.0 - fy) * b00 + fx * (1.0 - fy) * b10 +
            (1.0 - fx) * fy * b01 + fx * fy * b11;
  s.d_gx = (1.0 - fy) * (b10 - b00) + fy * (b11 - b01);
  s.d_gy = (1.0 - fx) * (b01 - b00) + fx * (b11 - b10);
  return s;
}

// Everything fixed per (stroke, placement, frame): the composed map, its
// inverse, parameter derivatives, and the pixel rectangle the stroke can
// touch.
struct StrokeGeom {
  AffineMap map;              // brush square -> canvas pixels
  double inv[4] = {0, 0, 0, 0};
  // d(map)/d{x, y, w, h, theta}: linear part entries a,b,c,d and tx,ty.
  struct MapDeriv {
    double a = 0, b = 0, c = 0, d = 0, tx = 0, ty = 0;
  };
  MapDeriv deriv[5];
  RegionPx bounds{0, 0, 0, 0};
  int grid = 0;
  bool empty = true;
};

StrokeGeom make_geom(const StrokeParams& s, double local_w, double local_h,
                     const AffineMap& outer, double theta_span, int frame_w,
                     int frame_h, const std::optional<RegionPx>& clip) {
  StrokeGeom g;
  const double angle = s.theta * theta_span;
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  const double su = s.w * local_w;
  const double sv = s.h * local_h;

  const AffineMap local{cs * su, -sn * sv, s.x * local_w,
                        sn * su, cs * sv,  s.y * local_h};
  g.map = compose(outer, local);

  const double det = g.map.det();
  if (std::abs(det) < 1e-12) return g;  // degenerate, nothing to draw
  g.inv[0] = g.map.d / det;
  g.inv[1] = -g.map.b / det;
  g.inv[2] = -g.map.c / det;
  g.inv[3] = g.map.a / det;

  // Local-map derivatives, pushed through the constant outer map.
  StrokeGeom::MapDeriv loc[5];
  loc[0] = {0, 0, 0, 0, local_w, 0};                                  // x
  loc[1] = {0, 0, 0, 0, 0, local_h};                                  // y
  loc[2] = {cs * local_w, 0, sn * local_w, 0, 0, 0};                  // w
  loc[3] = {0, -sn * local_h, 0, cs * local_h, 0, 0};                 // h
  loc[4] = {-sn * su * theta_span, -cs * sv * theta_span,             // theta
            cs * su * theta_span, -sn * sv * theta_span, 0, 0};
  for (int i = 0; i < 5; ++i) {
    g.deriv[i].a = outer.a * loc[i].a + outer.b * loc[i].c;
    g.deriv[i].b = outer.a * loc[i].b + outer.b * loc[i].d;
    g.deriv[i].c = outer.c * loc[i].a + outer.d * loc[i].c;
    g.deriv[i].d = outer.c * loc[i].b + outer.d * loc[i].d;
    g.deriv[i].tx = outer.a * loc[i].tx + outer.b * loc[i].ty;
    g.deriv[i].ty = outer.c * loc[i].tx + outer.d * loc[i].ty;
  }

  // Pixels the brush square can reach: image of [-0.5, 0.5]^2 plus margin
  // for the half-texel bilinear apron and the edge-map neighbourhood.
  const double ex = 0.5 * (std::abs(g.map.a) + std::abs(g.map.b));
  const double ey = 0.5 * (std::abs(g.map.c) + std::abs(g.map.d));
  const double texel = std::max(ex, ey) * 2.0 / std::max(1, g.grid);
  const double margin = 2.0 + texel;
  int x0 = static_cast<int>(std::floor(g.map.tx - ex - margin));
  int x1 = static_cast<int>(std::ceil(g.map.tx + ex + margin));
  int y0 = static_cast<int>(std::floor(g.map.ty - ey - margin));
  int y1 = static_cast<int>(std::ceil(g.map.ty + ey + margin));
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, frame_w);
  y1 = std::min(y1, frame_h);
  if (clip) {
    x0 = std::max(x0, clip->x0);
    y0 = std::max(y0, clip->y0);
    x1 = std::min(x1, clip->x0 + clip->w);
    y1 = std::min(y1, clip->y0 + clip->h);
  }
  if (x0 >= x1 || y0 >= y1) return g;
  g.bounds = RegionPx{x0, y0, x1 - x0, y1 - y0};
  g.empty = false;
  return g;
}

// Soft mask over geom.bounds, row-major w*h values.
struct MaskPatch {
  RegionPx rect{0, 0, 0, 0};
  std::vector<double> m;

  double at(int x, int y) const {  // frame coordinates, 0 outside rect
    if (x < rect.x0 || y < rect.y0 || x >= rect.x0 + rect.w ||
        y >= rect.y0 + rect.h) {
      return 0.0;
    }
    return m[static_cast<std::size_t>(y - rect.y0) * rect.w + (x - rect.x0)];
  }
};

struct SigmoidNorm {
  double lo, scale, k;
  explicit SigmoidNorm(double k_)
      : lo(sigmoid(-0.5 * k_)), scale(1.0 / (sigmoid(0.5 * k_) - sigmoid(-0.5 * k_))), k(k_) {}
  double value(double alpha) const {
    return (sigmoid(k * (alpha - 0.5)) - lo) * scale;
  }
  double deriv(double alpha) const {
    const double s = sigmoid(k * (alpha - 0.5));
    return k * s * (1.0 - s) * scale;
  }
};

MaskPatch soft_mask_patch(const BrushTexture& brush, const StrokeGeom& geom,
                          double k) {
  MaskPatch patch;
  if (geom.empty) return patch;
  patch.rect = geom.bounds;
  patch.m.assign(static_cast<std::size_t>(patch.rect.w) * patch.rect.h, 0.0);
  const SigmoidNorm sig(k);
  const int n = brush.alpha.width;
  for (int y = 0; y < patch.rect.h; ++y) {
    const double py = patch.rect.y0 + y + 0.5;
    for (int x = 0; x < patch.rect.w; ++x) {
      const double px = patch.rect.x0 + x + 0.5;
      const double qx = px - geom.map.tx;
      const double qy = py - geom.map.ty;
      const double u = geom.inv[0] * qx + geom.inv[1] * qy;
      const double v = geom.inv[2] * qx + geom.inv[3] * qy;
      const double gx = (u + 0.5) * n - 0.5;
      const double gy = (v + 0.5) * n - 0.5;
      const double alpha = sample_brush(brush.alpha, gx, gy).alpha;
      patch.m[static_cast<std::size_t>(y) * patch.rect.w + x] = sig.value(alpha);
    }
  }
  return patch;
}

// Composite one stroke's mask patch into the canvas in place:
// out = m^2 * color + (1 - m) * canvas per channel (the stroke image is
// mask * color and compositing multiplies by the mask again).
void composite_patch(ImageBuffer& canvas, const MaskPatch& patch,
                     const StrokeParams& s) {
  const double color[3] = {s.r, s.g, s.b};
  const int ch = canvas.channels;
  for (int y = 0; y < patch.rect.h; ++y) {
    for (int x = 0; x < patch.rect.w; ++x) {
      const double m = patch.m[static_cast<std::size_t>(y) * patch.rect.w + x];
      if (m == 0.0) continue;
      const int cx = patch.rect.x0 + x;
      const int cy = patch.rect.y0 + y;
      for (int c = 0; c < ch; ++c) {
        double& px = canvas.at(cx, cy, c);
        px = m * m * color[c % 3] + (1.0 - m) * px;
      }
    }
  }
}

double theta_span_of(const BrushTexture& brush) {
  // Symmetric builtins only need half a turn; user textures may be
  // asymmetric and get the full circle.
  if (brush.name == "oval" || brush.name == "rect-soft") {
    return std::numbers::pi;
  }
  return 2.0 * std::numbers::pi;
}

// dL/d{x,y,w,h,theta} for one stroke given dL/dmask over the patch.
// dmask_dloss has the same rect as patch.
void accumulate_geometry_grad(const BrushTexture& brush, const StrokeGeom& geom,
                              const MaskPatch& patch,
                              const std::vector<double>& dloss_dmask, double k,
                              ParamGrad& out) {
  const SigmoidNorm sig(k);
  const int n = brush.alpha.width;

  // du/dw = P_w * q + r_w with P_w = -B * dA_w * B, r_w = -B * dt_w.
  double P[5][4];
  double R[5][2];
  const double* B = geom.inv;
  for (int i = 0; i < 5; ++i) {
    const auto& d = geom.deriv[i];
    // T = dA * B
    const double t0 = d.a * B[0] + d.b * B[2];
    const double t1 = d.a * B[1] + d.b * B[3];
    const double t2 = d.c * B[0] + d.d * B[2];
    const double t3 = d.c * B[1] + d.d * B[3];
    P[i][0] = -(B[0] * t0 + B[1] * t2);
    P[i][1] = -(B[0] * t1 + B[1] * t3);
    P[i][2] = -(B[2] * t0 + B[3] * t2);
    P[i][3] = -(B[2] * t1 + B[3] * t3);
    R[i][0] = -(B[0] * d.tx + B[1] * d.ty);
    R[i][1] = -(B[2] * d.tx + B[3] * d.ty);
  }

  for (int y = 0; y < patch.rect.h; ++y) {
    const double py = patch.rect.y0 + y + 0.5;
    for (int x = 0; x < patch.rect.w; ++x) {
      const double gm = dloss_dmask[static_cast<std::size_t>(y) * patch.rect.w + x];
      if (gm == 0.0) continue;
      const double px = patch.rect.x0 + x + 0.5;
      const double qx = px - geom.map.tx;
      const double qy = py - geom.map.ty;
      const double u = B[0] * qx + B[1] * qy;
      const double v = B[2] * qx + B[3] * qy;
      const double gx = (u + 0.5) * n - 0.5;
      const double gy = (v + 0.5) * n - 0.5;
      const Sampled smp = sample_brush(brush.alpha, gx, gy);
      if (smp.d_gx == 0.0 && smp.d_gy == 0.0) continue;
      const double dm_da = sig.deriv(smp.alpha);
      const double cx = gm * dm_da * smp.d_gx * n;
      const double cy = gm * dm_da * smp.d_gy * n;
      for (int i = 0; i < 5; ++i) {
        const double du = P[i][0] * qx + P[i][1] * qy + R[i][0];
        const double dv = P[i][2] * qx + P[i][3] * qy + R[i][1];
        out[i] += cx * du + cy * dv;
      }
    }
  }
}

}  // namespace

StrokeParams StrokeParams::clamped() const {
  StrokeParams c = *this;
  c.x = clampd(c.x, 0.0, 1.0);
  c.y = clampd(c.y, 0.0, 1.0);
  c.w = clampd(c.w, kMinSize, kMaxSize);
  c.h = clampd(c.h, kMinSize, kMaxSize);
  c.theta = clampd(c.theta, 0.0, 1.0);
  c.r = clampd(c.r, 0.0, 1.0);
  c.g = clampd(c.g, 0.0, 1.0);
  c.b = clampd(c.b, 0.0, 1.0);
  return c;
}

bool StrokeParams::valid() const {
  const auto a = to_array();
  const auto c = clamped().to_array();
  for (int i = 0; i < 8; ++i) {
    if (a[i] != c[i]) return false;
  }
  return true;
}

AffineMap compose(const AffineMap& outer, const AffineMap& inner) {
  AffineMap m;
  m.a = outer.a * inner.a + outer.b * inner.c;
  m.b = outer.a * inner.b + outer.b * inner.d;
  m.c = outer.c * inner.a + outer.d * inner.c;
  m.d = outer.c * inner.b + outer.d * inner.d;
  m.tx = outer.a * inner.tx + outer.b * inner.ty + outer.tx;
  m.ty = outer.c * inner.tx + outer.d * inner.ty + outer.ty;
  return m;
}

AffineMap stroke_affine(const StrokeParams& s, double frame_w, double frame_h,
                        double theta_span) {
  const double angle = s.theta * theta_span;
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  const double su = s.w * frame_w;
  const double sv = s.h * frame_h;
  return AffineMap{cs * su, -sn * sv, s.x * frame_w,
                   sn * su, cs * sv,  s.y * frame_h};
}

SoftRaster rasterize_soft(const BrushTexture& brush, const AffineMap& map,
                          int frame_w, int frame_h, double k) {
  if (k <= 0.0) throw std::invalid_argument("rasterize_soft: k must be > 0");
  SoftRaster out;
  out.mask = ImageBuffer(frame_w, frame_h, 1);
  out.edge = ImageBuffer(frame_w, frame_h, 1);

  const SigmoidNorm sig(k);
  const int n = brush.alpha.width;
  const double det = map.det();
  if (std::abs(det) < 1e-12) return out;
  const double inv[4] = {map.d / det, -map.b / det, -map.c / det, map.a / det};

  for (int y = 0; y < frame_h; ++y) {
    const double py = y + 0.5;
    for (int x = 0; x < frame_w; ++x) {
      const double px = x + 0.5;
      const double qx = px - map.tx;
      const double qy = py - map.ty;
      const double u = inv[0] * qx + inv[1] * qy;
      const double v = inv[2] * qx + inv[3] * qy;
      const double gx = (u + 0.5) * n - 0.5;
      const double gy = (v + 0.5) * n - 0.5;
      out.mask.at(x, y, 0) = sig.value(sample_brush(brush.alpha, gx, gy).alpha);
    }
  }

  // Edge: central differences with replicated borders, then max-normalize.
  double peak = 0.0;
  for (int y = 0; y < frame_h; ++y) {
    const int ya = std::min(y + 1, frame_h - 1);
    const int yb = std::max(y - 1, 0);
    for (int x = 0; x < frame_w; ++x) {
      const int xa = std::min(x + 1, frame_w - 1);
      const int xb = std::max(x - 1, 0);
      const double hx = 0.5 * (out.mask.at(xa, y, 0) - out.mask.at(xb, y, 0));
      const double hy = 0.5 * (out.mask.at(x, ya, 0) - out.mask.at(x, yb, 0));
      const double e = std::sqrt(hx * hx + hy * hy);
      out.edge.at(x, y, 0) = e;
      peak = std::max(peak, e);
    }
  }
  if (peak > 0.0) {
    for (double& v : out.edge.data) v /= peak;
  }
  return out;
}

ImageBuffer rasterize_reference(const BrushTexture& brush, const AffineMap& map,
                                int frame_w, int frame_h) {
  ImageBuffer mask(frame_w, frame_h, 1);
  const double det = map.det();
  if (std::abs(det) < 1e-12) return mask;
  const double inv[4] = {map.d / det, -map.b / det, -map.c / det, map.a / det};
  const int n = brush.alpha.width;
  for (int y = 0; y < frame_h; ++y) {
    const double py = y + 0.5;
    for (int x = 0; x < frame_w; ++x) {
      const double px = x + 0.5;
      const double qx = px - map.tx;
      const double qy = py - map.ty;
      const double u = inv[0] * qx + inv[1] * qy;
      const double v = inv[2] * qx + inv[3] * qy;
      const double gx = (u + 0.5) * n - 0.5;
      const double gy = (v + 0.5) * n - 0.5;
      mask.at(x, y, 0) =
          sample_brush(brush.alpha, gx, gy).alpha >= 0.5 ? 1.0 : 0.0;
    }
  }
  return mask;
}

ImageBuffer stroke_image(const ImageBuffer& mask, double r, double g, double b) {
  if (mask.channels != 1) {
    throw std::invalid_argument("stroke_image: mask must be single-channel");
  }
  ImageBuffer img(mask.width, mask.height, 3);
  const double color[3] = {r, g, b};
  for (std::size_t p = 0; p < mask.data.size(); ++p) {
    for (int c = 0; c < 3; ++c) {
      img.data[p * 3 + c] = mask.data[p] * color[c];
    }
  }
  return img;
}

ImageBuffer render_sequence(const BrushTexture& brush,
                            std::span<const PlacedStroke> placed,
                            const ImageBuffer& canvas, double k) {
  ImageBuffer out = canvas;
  const double span = theta_span_of(brush);
  for (const PlacedStroke& ps : placed) {
    const StrokeGeom geom = make_geom(ps.s, ps.local_w, ps.local_h, ps.outer,
                                      span, canvas.width, canvas.height, ps.clip);
    if (geom.empty) continue;
    const MaskPatch patch = soft_mask_patch(brush, geom, k);
    composite_patch(out, patch, ps.s);
  }
  return out;
}

ImageBuffer render_strokes(const BrushTexture& brush,
                           std::span<const StrokeParams> strokes,
                           const AffineMap& outer, double local_w, double local_h,
                           const ImageBuffer& canvas, double k,
                           std::optional<RegionPx> clip) {
  std::vector<PlacedStroke> placed;
  placed.reserve(strokes.size());
  for (const StrokeParams& s : strokes) {
    placed.push_back(PlacedStroke{s, local_w, local_h, outer, clip});
  }
  return render_sequence(brush, placed, canvas, k);
}

std::vector<ParamGrad> backprop_sequence(const BrushTexture& brush,
                                         std::span<const PlacedStroke> placed,
                                         const ImageBuffer& canvas,
                                         const ImageBuffer& dloss_dcanvas,
                                         double k) {
  if (!canvas.same_shape(dloss_dcanvas)) {
    throw std::invalid_argument("backprop_sequence: adjoint shape mismatch");
  }
  const std::size_t count = placed.size();
  std::vector<ParamGrad> grads(count, ParamGrad{});
  if (count == 0) return grads;

  const double span = theta_span_of(brush);
  const int ch = canvas.channels;

  // Forward pass: keep the canvas before each stroke (checkpoint every
  // chunk to bound memory for long logs).
  constexpr std::size_t kChunk = 32;
  std::vector<ImageBuffer> checkpoints;
  std::vector<StrokeGeom> geoms;
  geoms.reserve(count);
  {
    ImageBuffer cur = canvas;
    for (std::size_t i = 0; i < count; ++i) {
      if (i % kChunk == 0) checkpoints.push_back(cur);
      const PlacedStroke& ps = placed[i];
      geoms.push_back(make_geom(ps.s, ps.local_w, ps.local_h, ps.outer, span,
                                canvas.width, canvas.height, ps.clip));
      if (!geoms.back().empty) {
        composite_patch(cur, soft_mask_patch(brush, geoms.back(), k), ps.s);
      }
    }
  }

  // Backward pass, chunk by chunk from the end.
  ImageBuffer adj = dloss_dcanvas;
  std::vector<double> dloss_dmask;
  const std::size_t n_chunks = (count + kChunk - 1) / kChunk;
  for (std::size_t chunk = n_chunks; chunk-- > 0;) {
    const std::size_t first = chunk * kChunk;
    const std::size_t last = std::min(first + kChunk, count);

    // Re-render the prefix canvases inside this chunk.
    std::vector<ImageBuffer> pre(last - first);
    ImageBuffer cur = checkpoints[chunk];
    for (std::size_t i = first; i < last; ++i) {
      pre[i - first] = cur;
      if (i + 1 < last && !geoms[i].empty) {
        composite_patch(cur, soft_mask_patch(brush, geoms[i], k), placed[i].s);
      }
    }

    for (std::size_t i = last; i-- > first;) {
      const StrokeGeom& geom = geoms[i];
      if (geom.empty) continue;
      const MaskPatch patch = soft_mask_patch(brush, geom, k);
      const ImageBuffer& before = pre[i - first];
      const StrokeParams& s = placed[i].s;
      const double color[3] = {s.r, s.g, s.b};

      dloss_dmask.assign(patch.m.size(), 0.0);
      double dcolor[3] = {0.0, 0.0, 0.0};
      for (int y = 0; y < patch.rect.h; ++y) {
        for (int x = 0; x < patch.rect.w; ++x) {
          const std::size_t pi = static_cast<std::size_t>(y) * patch.rect.w + x;
          const double m = patch.m[pi];
          const int cx = patch.rect.x0 + x;
          const int cy = patch.rect.y0 + y;
          double dm = 0.0;
          for (int c = 0; c < ch; ++c) {
            const double g = adj.at(cx, cy, c);
            dm += g * (2.0 * m * color[c % 3] - before.at(cx, cy, c));
            dcolor[c % 3] += g * m * m;
          }
          dloss_dmask[pi] = dm;
        }
      }
      grads[i][5] = dcolor[0];
      grads[i][6] = dcolor[1];
      grads[i][7] = dcolor[2];
      accumulate_geometry_grad(brush, geom, patch, dloss_dmask, k, grads[i]);

      // Propagate the adjoint to the canvas below this stroke.
      for (int y = 0; y < patch.rect.h; ++y) {
        for (int x = 0; x < patch.rect.w; ++x) {
          const double m = patch.m[static_cast<std::size_t>(y) * patch.rect.w + x];
          if (m == 0.0) continue;
          const int cx = patch.rect.x0 + x;
          const int cy = patch.rect.y0 + y;
          for (int c = 0; c < ch; ++c) {
            adj.at(cx, cy, c) *= (1.0 - m);
          }
        }
      }
    }
  }
  return grads;
}

std::vector<ParamGrad> grad_strokes(const BrushTexture& brush,
                                    std::span<const StrokeParams> strokes,
                                    const AffineMap& outer, double local_w,
                                    double local_h, const ImageBuffer& canvas,
                                    const ImageBuffer& target, double k,
                                    std::optional<RegionPx> clip) {
  if (!canvas.same_shape(target)) {
    throw std::invalid_argument("grad_strokes: target shape mismatch");
  }
  std::vector<PlacedStroke> placed;
  placed.reserve(strokes.size());
  for (const StrokeParams& s : strokes) {
    placed.push_back(PlacedStroke{s, local_w, local_h, outer, clip});
  }
  const ImageBuffer rendered = render_sequence(brush, placed, canvas, k);
  ImageBuffer adj(canvas.width, canvas.height, canvas.channels);
  for (std::size_t i = 0; i < adj.data.size(); ++i) {
    adj.data[i] = 2.0 * (rendered.data[i] - target.data[i]);
  }
  return backprop_sequence(brush, placed, canvas, adj, k);
}

SoftRaster placed_raster(const BrushTexture& brush, const PlacedStroke& ps,
                         int frame_w, int frame_h, double k) {
  const double span = theta_span_of(brush);
  const StrokeGeom geom =
      make_geom(ps.s, ps.local_w, ps.local_h, ps.outer, span, frame_w, frame_h, ps.clip);
  SoftRaster out;
  out.mask = ImageBuffer(frame_w, frame_h, 1);
  out.edge = ImageBuffer(frame_w, frame_h, 1);
  if (geom.empty) return out;
  const MaskPatch patch = soft_mask_patch(brush, geom, k);
  for (int y = 0; y < patch.rect.h; ++y) {
    for (int x = 0; x < patch.rect.w; ++x) {
      out.mask.at(patch.rect.x0 + x, patch.rect.y0 + y, 0) =
          patch.m[static_cast<std::size_t>(y) * patch.rect.w + x];
    }
  }
  double peak = 0.0;
  for (int y = 0; y < frame_h; ++y) {
    const int ya = std::min(y + 1, frame_h - 1);
    const int yb = std::max(y - 1, 0);
    for (int x = 0; x < frame_w; ++x) {
      const int xa = std::min(x + 1, frame_w - 1);
      const int xb = std::max(x - 1, 0);
      const double hx = 0.5 * (out.mask.at(xa, y, 0) - out.mask.at(xb, y, 0));
      const double hy = 0.5 * (out.mask.at(x, ya, 0) - out.mask.at(x, yb, 0));
      const double e = std::sqrt(hx * hx + hy * hy);
      out.edge.at(x, y, 0) = e;
      peak = std::max(peak, e);
    }
  }
  if (peak > 0.0) {
    for (double& v : out.edge.data) v /= peak;
  }
  return out;
}

ParamGrad backprop_stroke_edge(const BrushTexture& brush, const PlacedStroke& ps,
                               int frame_w, int frame_h,
                               const ImageBuffer& dloss_dedge, double k) {
  ParamGrad grad{};
  const double span = theta_span_of(brush);
  const StrokeGeom geom =
      make_geom(ps.s, ps.local_w, ps.local_h, ps.outer, span, frame_w, frame_h, ps.clip);
  if (geom.empty) return grad;
  const MaskPatch patch = soft_mask_patch(brush, geom, k);

  // Recompute the edge field and its normalizer over the touched rows
  // (the mask is zero outside the patch, so |grad mask| is too, except the
  // one-pixel ring the patch margin already covers).
  ImageBuffer mask(frame_w, frame_h, 1);
  for (int y = 0; y < patch.rect.h; ++y) {
    for (int x = 0; x < patch.rect.w; ++x) {
      mask.at(patch.rect.x0 + x, patch.rect.y0 + y, 0) =
          patch.m[static_cast<std::size_t>(y) * patch.rect.w + x];
    }
  }
  double peak = 0.0;
  for (int y = 0; y < frame_h; ++y) {
    const int ya = std::min(y + 1, frame_h - 1);
    const int yb = std::max(y - 1, 0);
    for (int x = 0; x < frame_w; ++x) {
      const int xa = std::min(x + 1, frame_w - 1);
      const int xb = std::max(x - 1, 0);
      const double hx = 0.5 * (mask.at(xa, y, 0) - mask.at(xb, y, 0));
      const double hy = 0.5 * (mask.at(x, ya, 0) - mask.at(x, yb, 0));
      peak = std::max(peak, std::sqrt(hx * hx + hy * hy));
    }
  }
  if (peak <= 0.0) return grad;

  // dL/dmask over the patch; the normalizer is stop-gradient.
  std::vector<double> dloss_dmask(patch.m.size(), 0.0);
  auto add_dmask = [&](int fx, int fy, double v) {
    if (fx < patch.rect.x0 || fy < patch.rect.y0 ||
        fx >= patch.rect.x0 + patch.rect.w || fy >= patch.rect.y0 + patch.rect.h) {
      return;
    }
    dloss_dmask[static_cast<std::size_t>(fy - patch.rect.y0) * patch.rect.w +
                (fx - patch.rect.x0)] += v;
  };
  for (int y = std::max(0, patch.rect.y0 - 1);
       y < std::min(frame_h, patch.rect.y0 + patch.rect.h + 1); ++y) {
    const int ya = std::min(y + 1, frame_h - 1);
    const int yb = std::max(y - 1, 0);
    for (int x = std::max(0, patch.rect.x0 - 1);
         x < std::min(frame_w, patch.rect.x0 + patch.rect.w + 1); ++x) {
      const double ge = dloss_dedge.at(x, y, 0);
      if (ge == 0.0) continue;
      const int xa = std::min(x + 1, frame_w - 1);
      const int xb = std::max(x - 1, 0);
      const double hx = 0.5 * (mask.at(xa, y, 0) - mask.at(xb, y, 0));
      const double hy = 0.5 * (mask.at(x, ya, 0) - mask.at(x, yb, 0));
      const double e = std::sqrt(hx * hx + hy * hy);
      if (e == 0.0) continue;
      const double s = ge / (e * peak);
      add_dmask(xa, y, s * hx * 0.5);
      add_dmask(xb, y, -s * hx * 0.5);
      add_dmask(x, ya, s * hy * 0.5);
      add_dmask(x, yb, -s * hy * 0.5);
    }
  }
  accumulate_geometry_grad(brush, geom, patch, dloss_dmask, k, grad);
  return grad;
}

}  // namespace cnp
