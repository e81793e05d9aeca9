#pragma once

#include <optional>
#include <string>
#include <vector>

#include "voken/core/types.hpp"
#include "voken/synth/scene.hpp"

namespace voken::eval {

// modified n-gram precision with brevity penalty; max_n in {1,2}
double bleu(const std::string& candidate, const std::vector<std::string>& references, int max_n);

// LCS-based F-measure (beta = 1)
double rouge_l(const std::string& candidate, const std::string& reference);

// Oracle-parsed attribute agreement: for each target object, its cell
// occupancy, shape and color each count one attribute; score is matched
// attributes over 3 * |target objects|. Extra generated objects are ignored.
double attribute_accuracy(const synth::Image& generated, const synth::SceneState& target);
// CLIP-T-style proxy: the caption is parsed back to a scene first
double attribute_accuracy_text(const synth::Image& generated, const std::string& caption);

// Frechet distance between Gaussian fits of two feature sets. Uses unbiased
// covariance; diagonal shrinkage eps*I is applied when a set is too small
// for a full-rank estimate (reported through shrinkage_applied).
double fid_proxy(const std::vector<std::vector<real>>& set_a,
                 const std::vector<std::vector<real>>& set_b,
                 bool* shrinkage_applied = nullptr);

// exp of the mean KL between per-image class distributions and the marginal
double is_proxy(const std::vector<std::vector<real>>& class_probs);

struct ModalContent {
    std::optional<std::string> text;
    std::optional<synth::Image> image;
};

// F1 over per-modality similarities (text: rouge_l, image: oracle-parsed
// attribute agreement); a modality missing on the other side scores 0
double mm_relevance(const ModalContent& predicted, const ModalContent& gold);

// --- linear-algebra helpers (exposed for the metric unit tests) ---

// eigendecomposition of a symmetric matrix via cyclic Jacobi rotations;
// a is row-major n*n, destroyed; returns eigenvalues and eigenvectors (cols)
void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                  std::vector<double>& eigenvectors);

}  // namespace voken::eval
