#include <bit>
#include <cstring>

#include "vau/detail/json.hpp"
#include "vau/error.hpp"
#include "vau/io.hpp"
#include "vau/scorer.hpp"

namespace vau {

namespace {

constexpr std::string_view k_magic = "VAUSCOR1";

template <typename U>
void put(std::string& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xFFu));
}

template <typename U>
U take(std::string_view in, std::size_t& pos, const std::string& source) {
  if (pos + sizeof(U) > in.size()) throw ValidationError(source + ": truncated checkpoint");
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  pos += sizeof(U);
  return static_cast<U>(v);
}

}  // namespace

std::string serialize_model(const ScorerModel& m) {
  std::string out(k_magic);
  put<std::uint32_t>(out, k_checkpoint_version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.arch.input_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.arch.hidden_dim));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.arch.window));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.arch.memory_slots));
  const std::uint32_t flags = (m.arch.encoder ? 1u : 0u) | (m.arch.global_attention ? 2u : 0u) |
                              (m.arch.local_attention ? 4u : 0u);
  put<std::uint32_t>(out, flags);
  put<std::uint64_t>(out, m.seed);
  const Eigen::VectorXd flat = m.params.flatten();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(flat.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(flat[i]));
  return out;
}

ScorerModel deserialize_model(std::string_view blob, const std::string& source) {
  if (blob.substr(0, k_magic.size()) != k_magic) throw ValidationError(source + ": not a scorer checkpoint");
  std::size_t pos = k_magic.size();
  const auto version = take<std::uint32_t>(blob, pos, source);
  if (version != k_checkpoint_version)
    throw ValidationError(source + ": unsupported checkpoint version " + std::to_string(version));
  ScorerArch arch;
  arch.input_dim = static_cast<int>(take<std::uint32_t>(blob, pos, source));
  arch.hidden_dim = static_cast<int>(take<std::uint32_t>(blob, pos, source));
  arch.window = static_cast<int>(take<std::uint32_t>(blob, pos, source));
  arch.memory_slots = static_cast<int>(take<std::uint32_t>(blob, pos, source));
  const auto flags = take<std::uint32_t>(blob, pos, source);
  arch.encoder = flags & 1u;
  arch.global_attention = flags & 2u;
  arch.local_attention = flags & 4u;
  const auto seed = take<std::uint64_t>(blob, pos, source);
  ScorerModel m = init_scorer(arch, seed);
  const auto count = take<std::uint64_t>(blob, pos, source);
  if (count != static_cast<std::uint64_t>(m.params.size()))
    throw ValidationError(source + ": parameter count does not match architecture");
  Eigen::VectorXd flat(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = std::bit_cast<double>(take<std::uint64_t>(blob, pos, source));
  if (pos != blob.size()) throw ValidationError(source + ": trailing bytes in checkpoint");
  m.params.assign(flat);
  return m;
}

std::string model_manifest(const ScorerModel& m, const TrainConfig* cfg) {
  detail::OrderedJson j;
  j["format"] = "vau-scorer";
  j["version"] = k_checkpoint_version;
  j["input_dim"] = m.arch.input_dim;
  j["hidden_dim"] = m.arch.hidden_dim;
  j["window"] = m.arch.window;
  j["memory_slots"] = m.arch.memory_slots;
  j["encoder"] = m.arch.encoder;
  j["global_attention"] = m.arch.global_attention;
  j["local_attention"] = m.arch.local_attention;
  j["param_count"] = m.params.size();
  j["seed"] = m.seed;
  if (cfg) {
    j["loss_weights"] = {{"as", cfg->weights.as}, {"triplet", cfg->weights.triplet}, {"kl", cfg->weights.kl}};
    j["margin"] = cfg->weights.margin;
    j["learning_rate"] = cfg->learning_rate;
    j["epochs"] = cfg->epochs;
    j["batch_size"] = cfg->batch_size;
    j["optimizer"] = cfg->optimizer == OptimizerKind::adam ? "adam" : "sgd_momentum";
  }
  return j.dump(2) + "\n";
}

void save_model(const std::filesystem::path& path, const ScorerModel& m, const TrainConfig* cfg) {
  io::write_file_atomic(path, serialize_model(m));
  io::write_file_atomic(std::filesystem::path(path.string() + ".json"), model_manifest(m, cfg));
}

ScorerModel load_model(const std::filesystem::path& path) {
  return deserialize_model(io::read_file(path), path.string());
}

}  // namespace vau
