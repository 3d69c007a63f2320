#include "seqslice/inference.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "seqslice/corpus.hpp"

namespace seqslice::model {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMat = Eigen::Map<const RowMat>;
using ConstVec = Eigen::Map<const Eigen::RowVectorXd>;
using Vec = Eigen::RowVectorXd;

ConstMat mat(const Tensor& t) {
  return ConstMat(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

ConstVec vec(const Tensor& t) {
  return ConstVec(t.values().data(), static_cast<Eigen::Index>(t.size()));
}

Vec layer_norm(const Vec& x, const Tensor& g, const Tensor& b) {
  const double mu = x.mean();
  const double var = (x.array() - mu).square().mean();
  const double inv = 1.0 / std::sqrt(var + 1e-5);
  return ((x.array() - mu) * inv * vec(g).array() + vec(b).array()).matrix();
}

void softmax_inplace(Eigen::Ref<Vec> x) {
  const double mx = x.maxCoeff();
  x = (x.array() - mx).exp().matrix();
  x /= x.sum();
}

struct Linear {
  ConstMat w;
  ConstVec b;
  Vec operator()(const Vec& x) const { return x * w + b; }
};

Linear linear(const ModelParams& p, const std::string& w, const std::string& b) {
  return {mat(p[w]), vec(p[b])};
}

}  // namespace

struct IncrementalDecoder::Shared {
  const Model* model = nullptr;
  RowMat enc;                          // [S x d]
  std::vector<int> ext_ids;
  std::vector<RowMat> cross_k, cross_v;  // per decoder layer
};

IncrementalDecoder::IncrementalDecoder(const Model& model, std::span<const int> ids,
                                       std::span<const int> ext_ids) {
  auto shared = std::make_shared<Shared>();
  shared->model = &model;
  EncoderStates enc = model.encode(ids, ext_ids);
  shared->enc = mat(enc.states);
  shared->ext_ids = enc.ext_ids;
  const auto& p = model.params();
  for (int l = 0; l < model.config().dec_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l) + ".cross";
    shared->cross_k.push_back((shared->enc * mat(p[pre + ".wk"])).rowwise() + vec(p[pre + ".bk"]));
    shared->cross_v.push_back((shared->enc * mat(p[pre + ".wv"])).rowwise() + vec(p[pre + ".bv"]));
  }
  shared_ = std::move(shared);
  self_k_.resize(static_cast<std::size_t>(model.config().dec_layers));
  self_v_.resize(self_k_.size());
}

DecoderStepOutput IncrementalDecoder::step(int token) {
  const Model& model = *shared_->model;
  const ModelConfig& cfg = model.config();
  const auto& p = model.params();
  if (static_cast<int>(length_) >= cfg.max_tgt) {
    throw LengthError("decoder reached max_tgt " + std::to_string(cfg.max_tgt));
  }
  const int d = cfg.d_model;
  const int heads = cfg.heads;
  const int dh = d / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto t = static_cast<Eigen::Index>(length_);

  const int fed = token >= cfg.vocab_size ? static_cast<int>(corpus::kUnk) : token;
  const Vec emb = mat(p["tok_emb"]).row(fed);
  const auto pos = positional_table(static_cast<int>(length_) + 1, d);
  Vec x = emb + ConstVec(pos.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(d), d);

  const Eigen::Index src = shared_->enc.rows();
  Vec alpha = Vec::Zero(src);
  for (int l = 0; l < cfg.dec_layers; ++l) {
    const std::string pre = "dec." + std::to_string(l);
    const auto li = static_cast<std::size_t>(l);
    {
      const Vec h = layer_norm(x, p[pre + ".ln1.g"], p[pre + ".ln1.b"]);
      const Vec q = linear(p, pre + ".self.wq", pre + ".self.bq")(h);
      const Vec k = linear(p, pre + ".self.wk", pre + ".self.bk")(h);
      const Vec v = linear(p, pre + ".self.wv", pre + ".self.bv")(h);
      self_k_[li].insert(self_k_[li].end(), k.data(), k.data() + d);
      self_v_[li].insert(self_v_[li].end(), v.data(), v.data() + d);
      ConstMat keys(self_k_[li].data(), t + 1, d);
      ConstMat vals(self_v_[li].data(), t + 1, d);
      Vec ctx(d);
      for (int hd = 0; hd < heads; ++hd) {
        Vec s = (keys.middleCols(hd * dh, dh) * q.segment(hd * dh, dh).transpose()).transpose() * inv;
        softmax_inplace(s);
        ctx.segment(hd * dh, dh) = s * vals.middleCols(hd * dh, dh);
      }
      x += linear(p, pre + ".self.wo", pre + ".self.bo")(ctx);
    }
    {
      const Vec h = layer_norm(x, p[pre + ".ln2.g"], p[pre + ".ln2.b"]);
      const Vec q = linear(p, pre + ".cross.wq", pre + ".cross.bq")(h);
      const RowMat& keys = shared_->cross_k[li];
      const RowMat& vals = shared_->cross_v[li];
      Vec ctx(d);
      const bool last = l + 1 == cfg.dec_layers;
      for (int hd = 0; hd < heads; ++hd) {
        Vec s = (keys.middleCols(hd * dh, dh) * q.segment(hd * dh, dh).transpose()).transpose() * inv;
        softmax_inplace(s);
        ctx.segment(hd * dh, dh) = s * vals.middleCols(hd * dh, dh);
        if (last) alpha += s;
      }
      if (last) alpha /= heads;
      x += linear(p, pre + ".cross.wo", pre + ".cross.bo")(ctx);
    }
    {
      const Vec h = layer_norm(x, p[pre + ".ln3.g"], p[pre + ".ln3.b"]);
      const Vec f = linear(p, pre + ".ffn.w1", pre + ".ffn.b1")(h).cwiseMax(0.0);
      x += linear(p, pre + ".ffn.w2", pre + ".ffn.b2")(f);
    }
  }
  ++length_;

  const Vec dec = layer_norm(x, p["dec.ln_f.g"], p["dec.ln_f.b"]);
  Vec p_vocab = linear(p, "out.w", "out.b")(dec);
  softmax_inplace(p_vocab);
  const Vec h_star = alpha * shared_->enc;

  DecoderStepOutput out;
  out.p_extended.assign(static_cast<std::size_t>(cfg.extended_size()), 0.0);
  out.alpha.assign(alpha.data(), alpha.data() + src);
  out.h_star.assign(h_star.data(), h_star.data() + d);
  double gate = 1.0;
  if (cfg.copy) {
    const Vec& x_dec = cfg.gate_input == GateInput::embedding ? emb : dec;
    const ConstMat w = mat(p["gen.w"]);
    const double z = h_star.dot(w.col(0).head(d)) + x_dec.dot(w.col(0).tail(d)) + p["gen.b"].values()[0];
    gate = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  out.p_gen = gate;
  for (int i = 0; i < cfg.vocab_size; ++i) out.p_extended[static_cast<std::size_t>(i)] = gate * p_vocab[i];
  if (cfg.copy) {
    for (Eigen::Index j = 0; j < src; ++j) {
      out.p_extended[static_cast<std::size_t>(shared_->ext_ids[static_cast<std::size_t>(j)])] +=
          (1.0 - gate) * alpha[j];
    }
  }
  return out;
}

}  // namespace seqslice::model
