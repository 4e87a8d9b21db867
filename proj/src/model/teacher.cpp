// SPDX-License-Identifier: Apache-2.0
#include "stepcot/teacher.hpp"

#include <cmath>
#include <stdexcept>

#include "stepcot/numerics/ops.hpp"

namespace stepcot {

namespace {

void check_config(const TeacherConfig& c) {
  if (c.class_counts.size() != data::kStepCount)
    throw std::invalid_argument("teacher: expected 7 class counts");
  if (c.raw_dim == 0 || c.hidden == 0 || c.layers == 0)
    throw std::invalid_argument("teacher: dimensions must be positive");
  if (c.dropout < 0.0 || c.dropout >= 1.0)
    throw std::invalid_argument("teacher: dropout must be in [0, 1)");
}

}  // namespace

TeacherModel::TeacherModel(const TeacherConfig& config)
    : config_(config), dropout_rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {
  check_config(config_);
  std::mt19937_64 rng(config_.seed);
  const std::size_t d = config_.hidden;
  prompts_ = PromptTable(data::kStepCount, d, rng);
  image_proj_ = Linear(config_.raw_dim, d, rng);
  memory_init_ = init_uniform_vector(d, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  for (std::size_t l = 0; l < config_.layers; ++l)
    gat_.emplace_back(d, config_.heads, ops::kLeakySlope, rng);
  fusion_ = Linear(2 * d, d, rng);
  fusion_norm_ = LayerNorm(d);
  for (std::size_t c : config_.class_counts)
    classifiers_.push_back({Linear(2 * d, d, rng), Linear(d, c, rng)});
  pred2mem_ = Linear(d, d, rng);
  gru_ = GruCell(d, d, rng);
}

Tensor TeacherModel::initial_memory(std::size_t batch) const {
  const Tensor row = ops::reshape(memory_init_, {1, config_.hidden});
  const std::vector<std::size_t> idx(batch, 0);
  return ops::gather_rows(row, idx);
}

Tensor TeacherModel::build_nodes(const Tensor& memory) const {
  if (memory.dim() != 2 || memory.size(1) != config_.hidden)
    throw std::invalid_argument("teacher: memory shape mismatch " + shape_str(memory.shape()));
  const std::size_t batch = memory.size(0);
  const Tensor table = ops::concat({prompts_.encode(), memory}, 0);
  std::vector<std::size_t> idx;
  idx.reserve(batch * kGraphNodes);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t s = 0; s < data::kStepCount; ++s) idx.push_back(s);
    idx.push_back(data::kStepCount + b);
  }
  return ops::gather_rows(table, idx);
}

Tensor TeacherModel::gat_forward(const Tensor& nodes, std::vector<AttentionWeights>* attention) const {
  if (nodes.dim() != 2 || nodes.size(0) == 0 || nodes.size(0) % kGraphNodes != 0)
    throw std::invalid_argument("gat_forward: expected 8 nodes per example, got shape " +
                                shape_str(nodes.shape()));
  if (attention) attention->clear();
  Tensor h = nodes;
  for (const auto& layer : gat_) {
    AttentionWeights w;
    h = layer.forward(h, kGraphNodes, attention ? &w : nullptr);
    if (attention) attention->push_back(std::move(w));
  }
  return h;
}

Tensor TeacherModel::step_logits(std::size_t s, const Tensor& updated_nodes,
                                 const Tensor& image_features, bool train) {
  if (s >= data::kStepCount)
    throw std::out_of_range("teacher_step: step index " + std::to_string(s) + " outside [0, 7)");
  const std::size_t batch = image_features.size(0);
  if (updated_nodes.size(0) != batch * kGraphNodes)
    throw std::invalid_argument("teacher_step: shape mismatch " + shape_str(updated_nodes.shape()) +
                                " vs " + shape_str(image_features.shape()));
  std::vector<std::size_t> step_rows(batch), mem_rows(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    step_rows[b] = b * kGraphNodes + s;
    mem_rows[b] = b * kGraphNodes + data::kStepCount;
  }
  const Tensor t = ops::gather_rows(updated_nodes, step_rows);
  const Tensor m = ops::gather_rows(updated_nodes, mem_rows);
  Tensor c = fusion_norm_.forward(fusion_.forward(ops::concat({t, m}, 1)));
  c = ops::dropout(ops::relu(c), config_.dropout, train, dropout_rng_);
  const auto& head = classifiers_[s];
  const Tensor hidden = ops::relu(head.hidden.forward(ops::concat({image_features, c}, 1)));
  return head.out.forward(hidden);
}

Tensor TeacherModel::memory_writeback(const Tensor& logits, const Tensor& w_cls,
                                      const Tensor& memory) const {
  if (logits.dim() != 2 || w_cls.dim() != 2 || logits.size(1) != w_cls.size(0) ||
      w_cls.size(1) != config_.hidden || memory.dim() != 2 || memory.size(0) != logits.size(0))
    throw std::invalid_argument("memory_writeback: shape mismatch " + shape_str(logits.shape()) +
                                " vs " + shape_str(w_cls.shape()) + " vs " +
                                shape_str(memory.shape()));
  const Tensor e = ops::matmul(ops::softmax(logits, 1), w_cls);
  return gru_.forward(pred2mem_.forward(e), memory);
}

TeacherOutput TeacherModel::forward(const Tensor& raw_features, bool train, TeacherTrace* trace) {
  if (raw_features.dim() != 2 || raw_features.size(0) == 0)
    throw std::invalid_argument("teacher_forward: empty batch");
  TeacherOutput out;
  out.image_features = image_proj_.forward(raw_features);
  Tensor memory = initial_memory(raw_features.size(0));
  if (trace) {
    trace->memory = {memory.detach()};
    trace->attention.clear();
  }
  for (std::size_t s = 0; s < data::kStepCount; ++s) {
    std::vector<AttentionWeights> attn;
    const Tensor updated = gat_forward(build_nodes(memory), trace ? &attn : nullptr);
    Tensor logits = step_logits(s, updated, out.image_features, train);

    std::vector<std::size_t> mem_rows(memory.size(0));
    for (std::size_t b = 0; b < mem_rows.size(); ++b)
      mem_rows[b] = b * kGraphNodes + data::kStepCount;
    memory = memory_writeback(logits, classifiers_[s].out.weight(),
                              ops::gather_rows(updated, mem_rows));
    out.logits.push_back(std::move(logits));
    if (trace) {
      trace->memory.push_back(memory.detach());
      trace->attention.push_back(std::move(attn));
    }
  }
  return out;
}

ParamList TeacherModel::parameters() const {
  ParamList out;
  prompts_.collect(out, "teacher/prompt_table");
  image_proj_.collect(out, "teacher/image_proj");
  out.push_back({"teacher/memory_init", memory_init_});
  for (std::size_t l = 0; l < gat_.size(); ++l) gat_[l].collect(out, "teacher/gat/" + std::to_string(l));
  fusion_.collect(out, "teacher/fusion/linear");
  fusion_norm_.collect(out, "teacher/fusion/norm");
  for (std::size_t s = 0; s < classifiers_.size(); ++s) {
    const std::string p = "teacher/classifier/" + std::to_string(s);
    classifiers_[s].hidden.collect(out, p + "/hidden");
    classifiers_[s].out.collect(out, p + "/out");
  }
  pred2mem_.collect(out, "teacher/pred2mem");
  gru_.collect(out, "teacher/gru");
  return out;
}

TeacherConfig infer_teacher_config(const std::map<std::string, Tensor>& values) {
  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = values.find(name);
    if (it == values.end()) throw std::invalid_argument("checkpoint: missing " + name);
    return it->second;
  };
  TeacherConfig c;
  const Tensor& proj = get("teacher/image_proj/weight");
  c.hidden = proj.size(0);
  c.raw_dim = proj.size(1);
  c.heads = get("teacher/gat/0/attn_src").size(0);
  c.layers = 0;
  while (values.count("teacher/gat/" + std::to_string(c.layers) + "/attn_src")) ++c.layers;
  c.class_counts.clear();
  for (std::size_t s = 0; s < data::kStepCount; ++s)
    c.class_counts.push_back(get("teacher/classifier/" + std::to_string(s) + "/out/weight").size(0));
  return c;
}

}  // namespace stepcot
