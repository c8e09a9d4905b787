// Copyright 2026 The serboost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ser::ml {

std::span<const double> Tree::leaf_values(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return {values.data() + nodes[i].value, width};
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::vector<int> Tree::used_features() const {
  std::vector<int> out;
  for (const auto& n : nodes)
    if (n.feature >= 0) out.push_back(n.feature);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;  // larger is better
};

bool better(const Split& cand, const Split& best) {
  if (best.feature < 0) return true;
  if (cand.score != best.score) return cand.score > best.score;
  if (cand.feature != best.feature) return cand.feature < best.feature;
  return cand.threshold < best.threshold;
}

double midpoint(double a, double b) {
  const double m = a + (b - a) * 0.5;
  return (m >= b) ? a : m;
}

class ClassTreeGrower {
 public:
  ClassTreeGrower(const Matrix& x, std::span<const int> y, std::size_t k, const ClassTreeParams& p, Rng& rng)
      : x_(x), y_(y), k_(k), p_(p), rng_(rng) {
    tree_.width = k;
    features_.resize(x.cols());
  }

  Tree grow(std::vector<std::size_t> rows) {
    grow_node(rows, 0);
    return std::move(tree_);
  }

 private:
  int make_leaf(const std::vector<double>& counts, double n) {
    TreeNode node;
    node.value = static_cast<std::uint32_t>(tree_.values.size());
    for (double c : counts) tree_.values.push_back(c / n);
    tree_.nodes.push_back(node);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  // Sum of squared class counts over size: maximizing sqL/nL + sqR/nR
  // minimizes the weighted Gini impurity of the children.
  Split best_sorted_split(int f, const std::vector<std::size_t>& rows, const std::vector<double>& total) {
    const std::size_t n = rows.size();
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = {x_(rows[i], static_cast<std::size_t>(f)), y_[rows[i]]};
    std::sort(order_.begin(), order_.end());
    left_.assign(k_, 0.0);
    right_ = total;
    double sq_l = 0.0, sq_r = 0.0;
    for (double c : total) sq_r += c * c;
    Split best;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const int cls = order_[i].second;
      sq_l += 2.0 * left_[cls] + 1.0;
      sq_r -= 2.0 * right_[cls] - 1.0;
      left_[cls] += 1.0;
      right_[cls] -= 1.0;
      const std::size_t nl = i + 1, nr = n - nl;
      if (order_[i].first == order_[i + 1].first) continue;
      if (nl < p_.min_samples_leaf || nr < p_.min_samples_leaf) continue;
      Split s{f, midpoint(order_[i].first, order_[i + 1].first),
              sq_l / static_cast<double>(nl) + sq_r / static_cast<double>(nr)};
      if (better(s, best)) best = s;
    }
    return best;
  }

  Split random_split(int f, const std::vector<std::size_t>& rows) {
    const auto col = static_cast<std::size_t>(f);
    double lo = x_(rows[0], col), hi = lo;
    for (auto r : rows) {
      lo = std::min(lo, x_(r, col));
      hi = std::max(hi, x_(r, col));
    }
    // The draw happens even for constant features so the stream of random
    // numbers does not depend on data values.
    const double u = rng_.uniform();
    if (!(hi > lo)) return {};
    double thr = lo + u * (hi - lo);
    if (thr >= hi) thr = lo;
    left_.assign(k_, 0.0);
    right_.assign(k_, 0.0);
    std::size_t nl = 0;
    for (auto r : rows) {
      if (x_(r, col) <= thr) {
        left_[y_[r]] += 1.0;
        ++nl;
      } else {
        right_[y_[r]] += 1.0;
      }
    }
    const std::size_t nr = rows.size() - nl;
    if (nl < p_.min_samples_leaf || nr < p_.min_samples_leaf || nl == 0 || nr == 0) return {};
    double sq_l = 0.0, sq_r = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      sq_l += left_[c] * left_[c];
      sq_r += right_[c] * right_[c];
    }
    return {f, thr, sq_l / static_cast<double>(nl) + sq_r / static_cast<double>(nr)};
  }

  int grow_node(std::vector<std::size_t>& rows, std::size_t depth) {
    const std::size_t n = rows.size();
    std::vector<double> counts(k_, 0.0);
    for (auto r : rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
    const double top = *std::max_element(counts.begin(), counts.end());
    const bool pure = top == static_cast<double>(n);
    if (pure || (p_.max_depth > 0 && depth >= p_.max_depth) || n < 2 * p_.min_samples_leaf)
      return make_leaf(counts, static_cast<double>(n));

    const std::size_t d = x_.cols();
    std::iota(features_.begin(), features_.end(), 0);
    std::size_t n_candidates = d;
    if (p_.max_features > 0 && p_.max_features < d) {
      n_candidates = p_.max_features;
      for (std::size_t i = 0; i < n_candidates; ++i) std::swap(features_[i], features_[i + rng_.below(d - i)]);
    }

    Split best;
    for (std::size_t i = 0; i < n_candidates; ++i) {
      const int f = static_cast<int>(features_[i]);
      const Split s = p_.random_thresholds ? random_split(f, rows) : best_sorted_split(f, rows, counts);
      if (s.feature >= 0 && better(s, best)) best = s;
    }
    if (best.feature < 0) return make_leaf(counts, static_cast<double>(n));

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    if (left.empty() || right.empty()) return make_leaf(counts, static_cast<double>(n));
    rows.clear();
    rows.shrink_to_fit();

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({best.feature, best.threshold, -1, -1, 0});
    const int l = grow_node(left, depth + 1);
    const int r = grow_node(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t k_;
  ClassTreeParams p_;
  Rng& rng_;
  Tree tree_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, int>> order_;
  std::vector<double> left_, right_;
};

class RegressionTreeGrower {
 public:
  RegressionTreeGrower(const Matrix& x, std::span<const double> t, std::span<const double> h,
                       const std::vector<std::vector<std::size_t>>& sorted, const RegressionTreeParams& p)
      : x_(x), t_(t), h_(h), sorted_(sorted), p_(p), node_of_(x.rows(), 0) {
    tree_.width = 1;
  }

  Tree grow() {
    std::vector<std::size_t> all(x_.rows());
    std::iota(all.begin(), all.end(), 0);
    grow_node(all, 0, 0);
    return std::move(tree_);
  }

 private:
  int make_leaf(const std::vector<std::size_t>& rows) {
    double num = 0.0, den = 0.0;
    for (auto r : rows) {
      num += t_[r];
      den += h_[r];
    }
    TreeNode node;
    node.value = static_cast<std::uint32_t>(tree_.values.size());
    tree_.values.push_back(std::abs(den) > 1e-150 ? p_.leaf_scale * num / den : 0.0);
    tree_.nodes.push_back(node);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  int grow_node(const std::vector<std::size_t>& rows, std::size_t depth, int tag) {
    const std::size_t n = rows.size();
    if ((p_.max_depth > 0 && depth >= p_.max_depth) || n < 2 * p_.min_samples_leaf) return make_leaf(rows);
    double total = 0.0;
    for (auto r : rows) total += t_[r];

    Split best;
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      double sum_l = 0.0;
      std::size_t nl = 0;
      double prev = 0.0;
      bool have_prev = false;
      for (std::size_t r : sorted_[f]) {
        if (node_of_[r] != tag) continue;
        const double v = x_(r, f);
        if (have_prev && v != prev && nl >= p_.min_samples_leaf && n - nl >= p_.min_samples_leaf) {
          const double sum_r = total - sum_l;
          const double score = sum_l * sum_l / static_cast<double>(nl) + sum_r * sum_r / static_cast<double>(n - nl);
          Split s{static_cast<int>(f), midpoint(prev, v), score};
          if (better(s, best)) best = s;
        }
        sum_l += t_[r];
        ++nl;
        prev = v;
        have_prev = true;
      }
    }
    if (best.feature < 0) return make_leaf(rows);

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({best.feature, best.threshold, -1, -1, 0});
    const int ltag = ++next_tag_;
    for (auto r : left) node_of_[r] = ltag;
    const int l = grow_node(left, depth + 1, ltag);
    const int rtag = ++next_tag_;
    for (auto r : right) node_of_[r] = rtag;
    const int rr = grow_node(right, depth + 1, rtag);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = rr;
    return id;
  }

  const Matrix& x_;
  std::span<const double> t_, h_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  RegressionTreeParams p_;
  std::vector<int> node_of_;
  int next_tag_ = 0;
  Tree tree_;
};

}  // namespace

Tree grow_classification_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                              std::span<const std::size_t> rows, const ClassTreeParams& params, Rng& rng) {
  ClassTreeGrower g(x, y, n_classes, params, rng);
  return g.grow(std::vector<std::size_t>(rows.begin(), rows.end()));
}

std::vector<std::vector<std::size_t>> presort(const Matrix& x) {
  std::vector<std::vector<std::size_t>> out(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& o = out[f];
    o.resize(x.rows());
    std::iota(o.begin(), o.end(), 0);
    std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
  }
  return out;
}

Tree grow_regression_tree(const Matrix& x, std::span<const double> target, std::span<const double> hess,
                          const std::vector<std::vector<std::size_t>>& sorted, const RegressionTreeParams& params) {
  RegressionTreeGrower g(x, target, hess, sorted, params);
  return g.grow();
}

}  // namespace detail
}  // namespace ser::ml
