#include "gve/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gve/rng.hpp"

namespace gve::cli {

namespace fs = std::filesystem;

std::vector<kg::ViewSample> harvest_views(const kg::ObjectVocabulary& vocab,
                                          const env::EnvConfig& env_cfg,
                                          std::uint64_t world_seed, int views_per_house) {
  std::vector<kg::ViewSample> views;
  const auto houses = env::split_house_indices("train", env_cfg);
  for (kg::RoomType room : kg::kAllRooms) {
    for (int idx : houses) {
      const std::uint64_t hseed = env::house_seed_for(room, idx, world_seed);
      const env::HouseLayout layout = env::generate_house(hseed, room, vocab, env_cfg);
      Rng rng(mix_seed(hseed, fnv1a64("harvest")));
      std::vector<int> free_cells;
      for (int y = 0; y < layout.height; ++y)
        for (int x = 0; x < layout.width; ++x)
          if (!layout.wall(x, y)) free_cells.push_back(y * layout.width + x);
      for (int v = 0; v < views_per_house; ++v) {
        env::AgentPose pose;
        const int cell = free_cells[rng.below(static_cast<std::uint32_t>(free_cells.size()))];
        pose.x = cell % layout.width;
        pose.y = cell / layout.width;
        pose.heading = static_cast<env::Heading>(rng.below(4));
        pose.pitch = static_cast<env::Pitch>(rng.below(3));
        const auto seen = env::visible_objects(layout, pose, vocab, env_cfg);
        kg::ViewSample sample;
        sample.room = room;
        for (int id = 0; id < vocab.size(); ++id)
          if (seen[static_cast<size_t>(id)].visible) sample.objects.push_back(id);
        views.push_back(std::move(sample));
      }
    }
  }
  return views;
}

kg::AdjacencyTensor build_training_graph(const RunConfig& cfg,
                                         const kg::ObjectVocabulary& vocab) {
  const auto views =
      harvest_views(vocab, cfg.env_config(),
                    static_cast<std::uint64_t>(cfg.integer("world.seed")),
                    static_cast<int>(cfg.integer("graph.views_per_house")));
  kg::AdjacencyTensor adj = kg::build_from_cooccurrence(
      vocab, views, static_cast<int>(cfg.integer("graph.threshold")));
  if (agent::randomized_graph(cfg.variant()))
    adj = kg::randomize_edges(adj, vocab,
                              static_cast<std::uint64_t>(cfg.integer("run.seed")));
  return adj;
}

diff::ParamSet run_training(const RunConfig& cfg, const std::string& out_dir,
                            std::atomic<bool>* stop, const std::string& resume_dir) {
  fs::create_directories(out_dir);
  cfg.write_resolved(out_dir + "/config.resolved");

  const kg::ObjectVocabulary vocab = kg::make_toy_vocabulary();
  std::optional<kg::AdjacencyTensor> adj;
  if (agent::uses_graph(cfg.variant())) {
    adj = build_training_graph(cfg, vocab);
    kg::save_adjacency(out_dir + "/graph.json", *adj, vocab);
  }

  train::TrainContext ctx;
  ctx.vocab = &vocab;
  ctx.adj = adj ? &*adj : nullptr;
  ctx.agent_cfg = cfg.agent_config(vocab.size());
  ctx.env_cfg = cfg.env_config();
  ctx.a3c = cfg.a3c_config();
  ctx.maml = cfg.maml_config();
  ctx.run_seed = static_cast<std::uint64_t>(cfg.integer("run.seed"));
  ctx.world_seed = static_cast<std::uint64_t>(cfg.integer("world.seed"));
  {
    std::stringstream ss(cfg.str("train.freeze_zero"));
    std::string prefix;
    while (std::getline(ss, prefix, ','))
      if (!prefix.empty()) ctx.freeze_zero.push_back(prefix);
  }

  return train::train_run(ctx, out_dir, stop, resume_dir);
}

std::vector<eval::EpisodeRecord> run_evaluation(const RunConfig& cfg,
                                                const kg::ObjectVocabulary& vocab,
                                                const kg::AdjacencyTensor* adj,
                                                const diff::ParamSet* params,
                                                const EvalOptions& opts) {
  const env::EnvConfig env_cfg = cfg.env_config();
  const auto houses = env::split_house_indices(opts.split, env_cfg);
  const std::uint64_t world_seed = static_cast<std::uint64_t>(cfg.integer("world.seed"));
  const train::MAMLConfig maml = cfg.maml_config();

  agent::AgentConfig agent_cfg = cfg.agent_config(vocab.size());
  std::optional<agent::PolicyNet> net;
  if (!opts.random_policy) net.emplace(agent_cfg, vocab, adj);

  std::map<std::uint64_t, env::HouseLayout> cache;
  std::vector<eval::EpisodeRecord> records;
  records.reserve(static_cast<size_t>(opts.episodes));

  for (int i = 0; i < opts.episodes; ++i) {
    const auto room = static_cast<kg::RoomType>(i % kg::kRoomCount);
    const int house_idx =
        houses[static_cast<size_t>((i / kg::kRoomCount) % static_cast<int>(houses.size()))];
    const std::uint64_t hseed = env::house_seed_for(room, house_idx, world_seed);
    auto it = cache.find(hseed);
    if (it == cache.end())
      it = cache.emplace(hseed, env::generate_house(hseed, room, vocab, env_cfg)).first;
    const env::HouseLayout& layout = it->second;
    const env::EpisodeSpec spec =
        env::sample_episode(layout, mix_seed(opts.seed, static_cast<std::uint64_t>(i)),
                            env_cfg.max_steps_test, opts.split);
    const std::uint64_t sample_seed = mix_seed(opts.seed, 0x9e11u + static_cast<std::uint64_t>(i));

    train::RolloutResult rollout =
        opts.random_policy
            ? train::rollout_random(layout, spec, vocab, env_cfg, sample_seed)
            : train::rollout_episode(*net, *params, layout, spec, env_cfg, sample_seed,
                                     opts.adapt, maml);

    eval::EpisodeRecord rec;
    rec.success = rollout.success;
    rec.steps = rollout.steps;
    rec.optimal = env::shortest_path_length(layout, spec.spawn, spec.target, vocab, env_cfg);
    rec.room = room;
    rec.target = spec.target;
    rec.values = std::move(rollout.values);
    rec.rewards = std::move(rollout.rewards);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<eval::EpisodeRecord> evaluate_run_dir(const std::string& run_dir,
                                                  const std::string& split, int episodes,
                                                  const std::string& adapt_mode,
                                                  std::optional<std::uint64_t> seed,
                                                  bool random_policy) {
  RunConfig cfg = RunConfig::defaults();
  cfg.load_file(run_dir + "/config.resolved");

  const kg::ObjectVocabulary vocab = kg::make_toy_vocabulary();
  const agent::Variant variant = cfg.variant();

  std::optional<kg::AdjacencyTensor> adj;
  std::optional<diff::ParamSet> params;
  if (!random_policy) {
    diff::LoadedCheckpoint loaded = diff::load_checkpoint(run_dir + "/checkpoint");
    if (loaded.meta.variant != agent::variant_name(variant))
      throw std::runtime_error("checkpoint was trained as " + loaded.meta.variant +
                               ", run config says " + agent::variant_name(variant));
    params = std::move(loaded.params);
    if (agent::uses_graph(variant))
      adj = kg::load_adjacency(run_dir + "/graph.json", vocab);
  }

  EvalOptions opts;
  opts.split = split;
  opts.episodes = episodes > 0 ? episodes : static_cast<int>(cfg.integer("eval.episodes"));
  opts.seed = seed ? *seed : static_cast<std::uint64_t>(cfg.integer("eval.seed"));
  if (adapt_mode == "on")
    opts.adapt = true;
  else if (adapt_mode == "off")
    opts.adapt = false;
  else if (adapt_mode == "auto")
    opts.adapt = agent::uses_maml(variant) && !random_policy;
  else
    throw ConfigError("eval adapt mode must be auto|on|off, got " + adapt_mode);
  opts.random_policy = random_policy;

  auto records = run_evaluation(cfg, vocab, adj ? &*adj : nullptr,
                                params ? &*params : nullptr, opts);

  const std::string tag = random_policy ? split + "-random" : split;
  eval::save_records(run_dir + "/records-" + tag + ".jsonl", records);
  const eval::MetricsReport report = eval::compute_metrics(records);
  const std::string label =
      std::string(random_policy ? "Random" : agent::variant_name(variant)) + "/" + split;
  eval::write_metrics_csv(run_dir + "/metrics-" + tag + ".csv", {{label, report}});
  eval::write_value_error_csv(run_dir + "/value_error-" + tag + ".csv",
                              eval::value_error_curve(records, cfg.num("train.gamma")));
  return records;
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string value_error_svg(
    const std::vector<std::pair<std::string, eval::ValueErrorCurve>>& curves) {
  const int width = 640, height = 420;
  const int ml = 56, mr = 16, mt = 20, mb = 44;
  const double pw = width - ml - mr, ph = height - mt - mb;

  size_t max_t = 1;
  double max_y = 1e-9;
  for (const auto& [label, c] : curves) {
    max_t = std::max(max_t, c.mean.size());
    for (size_t t = 0; t < c.mean.size(); ++t)
      max_y = std::max(max_y, c.mean[t] + c.stddev[t]);
  }

  auto sx = [&](double t) { return ml + pw * (max_t <= 1 ? 0.0 : t / (max_t - 1)); };
  auto sy = [&](double v) { return mt + ph * (1.0 - v / max_y); };

  static const char* palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << (mt + static_cast<int>(ph)) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << (mt + static_cast<int>(ph)) << "\" x2=\""
      << (ml + static_cast<int>(pw)) << "\" y2=\"" << (mt + static_cast<int>(ph))
      << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = max_y * tick / 4.0;
    svg << "<text x=\"" << (ml - 6) << "\" y=\"" << fmt2(sy(v) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt2(v) << "</text>\n";
    const double t = static_cast<double>(max_t - 1) * tick / 4.0;
    svg << "<text x=\"" << fmt2(sx(t)) << "\" y=\"" << (height - mb + 16)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt2(t) << "</text>\n";
  }
  svg << "<text x=\"" << (ml + static_cast<int>(pw) / 2) << "\" y=\"" << (height - 8)
      << "\" text-anchor=\"middle\" font-size=\"12\">timestep</text>\n";
  svg << "<text x=\"14\" y=\"" << (mt + static_cast<int>(ph) / 2)
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
      << (mt + static_cast<int>(ph) / 2) << ")\">value error</text>\n";

  int ci = 0;
  for (const auto& [label, c] : curves) {
    const char* color = palette[ci % 6];
    if (!c.mean.empty()) {
      // band: mean + std forward, mean - std back
      svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (size_t t = 0; t < c.mean.size(); ++t)
        svg << fmt2(sx(static_cast<double>(t))) << ","
            << fmt2(sy(c.mean[t] + c.stddev[t])) << " ";
      for (size_t t = c.mean.size(); t-- > 0;)
        svg << fmt2(sx(static_cast<double>(t))) << ","
            << fmt2(sy(std::max(0.0, c.mean[t] - c.stddev[t]))) << " ";
      svg << "\"/>\n";
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t t = 0; t < c.mean.size(); ++t)
        svg << fmt2(sx(static_cast<double>(t))) << "," << fmt2(sy(c.mean[t])) << " ";
      svg << "\"/>\n";
    }
    const int ly = mt + 14 + 16 * ci;
    svg << "<line x1=\"" << (ml + 10) << "\" y1=\"" << ly << "\" x2=\"" << (ml + 34)
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << (ml + 40) << "\" y=\"" << (ly + 4) << "\" font-size=\"11\">"
        << label << "</text>\n";
    ++ci;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string inspect_graph_report(const kg::AdjacencyTensor& adj,
                                 const kg::ObjectVocabulary& vocab, int top_k) {
  std::ostringstream out;
  out << "knowledge graph: " << adj.nodes() << " nodes, " << adj.channels()
      << " channels (4 rooms + self)\n";
  char line[128];
  std::snprintf(line, sizeof(line), "room-channel edge density: %.3f\n",
                adj.room_density(vocab));
  out << line;
  for (int id = 0; id < vocab.size(); ++id) {
    const auto edges = kg::top_edges(adj, id, top_k);
    out << vocab.name(id) << ":";
    if (edges.empty()) out << " (no edges)";
    for (const auto& e : edges) {
      std::snprintf(line, sizeof(line), " %s@%s=%.2f", vocab.name(e.other).c_str(),
                    kg::room_name(static_cast<kg::RoomType>(e.channel)), e.weight);
      out << line;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace gve::cli
