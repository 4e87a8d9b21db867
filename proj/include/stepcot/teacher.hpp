// SPDX-License-Identifier: Apache-2.0
#pragma once

// Graph-attention memory teacher. Each forward pass runs seven steps; at step
// s the node graph {t_1..t_7, m} is updated by the shared GAT stack, the step
// node and memory node are fused into a context, the step classifier reads
// [v; c_s], and the prediction is written back into memory with a GRU.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "stepcot/encoders.hpp"
#include "stepcot/gat.hpp"
#include "stepcot/numerics/gru.hpp"

namespace stepcot {

/// Nodes per graph: seven step prompts followed by the memory node.
inline constexpr std::size_t kGraphNodes = 8;

struct TeacherConfig {
  std::size_t raw_dim = 64;
  std::size_t hidden = 768;
  std::size_t heads = 4;
  std::size_t layers = 2;
  double dropout = 0.1;
  std::vector<std::size_t> class_counts = data::StepSchema::standard().class_counts();
  std::uint64_t seed = 0;
};

struct TeacherOutput {
  std::vector<Tensor> logits;  // one [B x C_s] tensor per step
  Tensor image_features;       // v, [B x hidden]
};

/// Optional diagnostics captured during teacher_forward.
struct TeacherTrace {
  std::vector<Tensor> memory;                        // m_0 .. m_7, detached
  std::vector<std::vector<AttentionWeights>> attention;  // [step][layer]
};

struct StepClassifier {
  Linear hidden;  // [v; c] -> d
  Linear out;     // d -> C_s; its weight is W_cls
};

class TeacherModel {
 public:
  explicit TeacherModel(const TeacherConfig& config);

  TeacherOutput forward(const Tensor& raw_features, bool train, TeacherTrace* trace = nullptr);

  /// nodes [(B*8) x d] -> [(B*8) x d]; throws unless rows are a multiple of 8.
  Tensor gat_forward(const Tensor& nodes, std::vector<AttentionWeights>* attention = nullptr) const;
  /// Stacks {t_1..t_7, memory row b} per example into [(B*8) x d].
  Tensor build_nodes(const Tensor& memory) const;
  /// Logits for step s given GAT-updated nodes and v [B x d].
  Tensor step_logits(std::size_t s, const Tensor& updated_nodes, const Tensor& image_features,
                     bool train);
  /// GRU(pred2mem(softmax(logits) W_cls), memory).
  Tensor memory_writeback(const Tensor& logits, const Tensor& w_cls, const Tensor& memory) const;
  /// m_0 broadcast to [batch x d].
  Tensor initial_memory(std::size_t batch) const;

  ParamList parameters() const;
  const TeacherConfig& config() const { return config_; }

  PromptTable& prompts() { return prompts_; }
  const Linear& image_projection() const { return image_proj_; }
  const Tensor& memory_init() const { return memory_init_; }
  std::vector<StepClassifier>& classifiers() { return classifiers_; }
  Linear& pred2mem() { return pred2mem_; }
  GruCell& gru() { return gru_; }
  const std::vector<GatLayer>& gat_layers() const { return gat_; }

 private:
  TeacherConfig config_;
  std::mt19937_64 dropout_rng_;
  PromptTable prompts_;
  Linear image_proj_;
  Tensor memory_init_;
  std::vector<GatLayer> gat_;
  Linear fusion_;
  LayerNorm fusion_norm_;
  std::vector<StepClassifier> classifiers_;
  Linear pred2mem_;
  GruCell gru_;
};

/// Recovers dims from checkpoint tensor shapes (entries prefixed "teacher/").
TeacherConfig infer_teacher_config(const std::map<std::string, Tensor>& values);

}  // namespace stepcot
