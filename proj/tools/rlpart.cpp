// rlpart: multilevel graph partitioning with RL-refined separators, plus
// nested dissection ordering and symbolic fill evaluation.
//
// Commands: train, partition, separator, order, evalfill, gen-dataset.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rlpart/data_io.hpp"
#include "rlpart/edge_sep.hpp"
#include "rlpart/ordering.hpp"
#include "rlpart/train.hpp"
#include "rlpart/vertex_sep.hpp"

namespace {

using namespace rlpart;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string default_checkpoint_dir() {
  if (const char* env = std::getenv("RLPART_CHECKPOINT_DIR")) return env;
  return ".";
}

struct CommonOpts {
  std::string input, output;
  std::string refine_ckpt, coarse_ckpt, edge_ckpt;
  std::uint64_t seed = 1;
  int n_min = 100;
  int k_hops = 3;
  double balance_cap = 1.2;
  std::string external_cmd;
};

Graph load_graph(const std::string& path, bool keep_largest = true) {
  Graph g;
  if (path.size() > 4 && path.substr(path.size() - 4) == ".grb") {
    g = read_graph_cache(path);
  } else {
    g = read_matrix_market(path).adj;
  }
  if (keep_largest && !g.connected()) {
    int removed = 0;
    g = largest_component(g, &removed);
    std::cerr << "note: input disconnected, kept largest component (" << g.num_nodes()
              << " nodes, dropped " << removed << ")\n";
  }
  return g;
}

std::optional<RefineAgent> load_refine(const std::string& path, TaskKind kind, int channels) {
  if (path.empty()) return std::nullopt;
  RefineAgent agent(channels);
  load_checkpoint(agent.params(), kind, channels, path);
  return agent;
}

std::optional<CoarseAgent> load_coarse(const std::string& path) {
  if (path.empty()) return std::nullopt;
  CoarseAgent agent;
  load_checkpoint(agent.params(), TaskKind::CoarsePartition, CoarseAgent::kInChannels, path);
  return agent;
}

RefineConfig make_refine_config(const CommonOpts& o, bool has_coarse_agent) {
  RefineConfig cfg;
  cfg.n_min = o.n_min;
  cfg.k_hops = o.k_hops;
  cfg.seed = o.seed;
  cfg.balance_cap = o.balance_cap;
  if (!o.external_cmd.empty()) {
    cfg.coarse_solver = CoarseSolver::External;
    cfg.external_cmd = o.external_cmd;
  } else if (has_coarse_agent) {
    cfg.coarse_solver = CoarseSolver::RlAgent;
  }
  return cfg;
}

// Separator source for nested dissection, best available first: the vertex
// pipeline when a vertex checkpoint is loaded, else the minimum-cover
// construction over the edge pipeline, else greedy bisection + cover. The
// minimality sweep only applies NS-improving three-way actions.
SeparatorProvider make_nd_provider(const RefineConfig& cfg, const RefineAgent* vertex_agent,
                                   const RefineAgent* edge_agent,
                                   const CoarseAgent* coarse_agent) {
  if (vertex_agent) {
    return [cfg, vertex_agent, coarse_agent](const Graph& sub) {
      Separator3 s = vertex_separator(sub, cfg, vertex_agent, coarse_agent);
      make_separator_minimal(sub, s);
      return s;
    };
  }
  if (edge_agent) {
    return [cfg, edge_agent, coarse_agent](const Graph& sub) {
      Separator3 s = edge_to_vertex_separator(sub, edge_separator(sub, cfg, edge_agent,
                                                                  coarse_agent));
      make_separator_minimal(sub, s);
      return s;
    };
  }
  return [](const Graph& sub) {
    Separator3 s = edge_to_vertex_separator(sub, greedy_fallback_partition(sub));
    make_separator_minimal(sub, s);
    return s;
  };
}

int cmd_train(const std::string& task, const std::string& dataset_dir, bool use_delaunay,
              int epochs, const TrainConfig& tc, int dataset_n_min, int dataset_n_max,
              int dataset_count, const std::string& out_ckpt, const std::string& log_path) {
  Dataset ds;
  if (use_delaunay) {
    ds = build_training_dataset(DatasetKind::Delaunay, "", dataset_n_min, dataset_n_max,
                                dataset_count, tc.seed);
  } else if (!dataset_dir.empty()) {
    ds = build_training_dataset(DatasetKind::MatrixDir, dataset_dir, dataset_n_min,
                                dataset_n_max, dataset_count, tc.seed);
  } else {
    std::cerr << "error: train needs --mtx-dir or --delaunay\n";
    return 2;
  }
  std::vector<Graph> graphs;
  graphs.reserve(ds.entries.size());
  for (auto& e : ds.entries) graphs.push_back(std::move(e.graph));

  TrainOutcome outcome;
  if (task == "edge") {
    RefineAgent agent(5);
    agent.init_params(tc.seed);
    outcome = train_edge_agent(agent, graphs, epochs, tc);
    save_checkpoint(agent.params(), TaskKind::EdgeRefine, 5, out_ckpt);
  } else if (task == "vertex") {
    RefineAgent agent(7);
    agent.init_params(tc.seed);
    outcome = train_vertex_agent(agent, graphs, epochs, tc);
    save_checkpoint(agent.params(), TaskKind::VertexRefine, 7, out_ckpt);
  } else if (task == "coarse") {
    CoarseAgent agent;
    agent.init_params(tc.seed);
    outcome = train_coarse_agent(agent, graphs, epochs, tc);
    save_checkpoint(agent.params(), TaskKind::CoarsePartition, CoarseAgent::kInChannels,
                    out_ckpt);
  } else {
    std::cerr << "error: unknown task " << task << "\n";
    return 2;
  }
  if (!log_path.empty()) write_training_log(outcome, log_path);

  double total_reward = 0;
  long episodes = 0;
  for (const auto& r : outcome.log)
    if (!r.skipped) {
      total_reward += r.cumulative_reward;
      episodes++;
    }
  std::cout << "trained " << task << " agent on " << graphs.size() << " graphs x " << epochs
            << " epochs; episodes=" << episodes
            << " mean_cumulative_reward=" << (episodes ? total_reward / episodes : 0.0)
            << "\ncheckpoint: " << out_ckpt << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilevel graph partitioning with learned refinement"};
  app.set_config("--config", "", "plain key=value config file; flags win");
  app.require_subcommand(1);

  // ---- train ----
  std::string train_task = "edge", mtx_dir, out_ckpt, train_log;
  bool use_delaunay = false;
  int epochs = 2, ds_n_min = 100, ds_n_max = 5000, ds_count = 200;
  TrainConfig tc;
  auto* train = app.add_subcommand("train", "train an agent with A2C");
  train->add_option("--task", train_task, "edge | coarse | vertex")->required();
  train->add_option("--mtx-dir", mtx_dir, "directory of .mtx training graphs");
  train->add_flag("--delaunay", use_delaunay, "generate a Delaunay training set");
  train->add_option("--epochs", epochs);
  train->add_option("--dataset-n-min", ds_n_min);
  train->add_option("--dataset-n-max", ds_n_max);
  train->add_option("--dataset-size", ds_count);
  train->add_option("--gamma", tc.gamma);
  train->add_option("--alpha", tc.alpha);
  train->add_option("--lr", tc.lr);
  train->add_option("--workers", tc.workers);
  train->add_option("--update-every", tc.update_every);
  std::string return_order = "togo";
  train->add_option("--return-order", return_order, "togo | literal (past-accumulated)");
  train->add_option("--seed", tc.seed);
  train->add_option("--out-checkpoint", out_ckpt);
  train->add_option("--log", train_log);

  // ---- partition ----
  CommonOpts po;
  auto* partition = app.add_subcommand("partition", "two-way edge separator");
  partition->add_option("--input", po.input)->required();
  partition->add_option("--out", po.output)->required();
  partition->add_option("--checkpoint", po.refine_ckpt);
  partition->add_option("--coarse-checkpoint", po.coarse_ckpt);
  partition->add_option("--seed", po.seed);
  partition->add_option("--n-min", po.n_min);
  partition->add_option("--k-hops", po.k_hops);
  partition->add_option("--balance-cap", po.balance_cap);
  partition->add_option("--external-partitioner", po.external_cmd);

  // ---- separator ----
  CommonOpts so;
  auto* separator = app.add_subcommand("separator", "three-way vertex separator");
  separator->add_option("--input", so.input)->required();
  separator->add_option("--out", so.output)->required();
  separator->add_option("--checkpoint", so.refine_ckpt);
  separator->add_option("--coarse-checkpoint", so.coarse_ckpt);
  separator->add_option("--seed", so.seed);
  separator->add_option("--n-min", so.n_min);
  separator->add_option("--k-hops", so.k_hops);
  separator->add_option("--balance-cap", so.balance_cap);
  separator->add_option("--external-partitioner", so.external_cmd);

  // ---- order ----
  CommonOpts oo;
  std::string method = "nd";
  auto* order = app.add_subcommand("order", "fill-reducing ordering");
  order->add_option("--input", oo.input)->required();
  order->add_option("--out", oo.output)->required();
  order->add_option("--method", method, "nd | md | natural");
  order->add_option("--checkpoint", oo.refine_ckpt, "vertex separator checkpoint for nd");
  order->add_option("--edge-checkpoint", oo.edge_ckpt, "edge agent for cover-based separators");
  order->add_option("--coarse-checkpoint", oo.coarse_ckpt);
  order->add_option("--balance-cap", oo.balance_cap);
  order->add_option("--seed", oo.seed);
  order->add_option("--n-min", oo.n_min);
  order->add_option("--k-hops", oo.k_hops);

  // ---- evalfill ----
  CommonOpts eo;
  std::string orderings = "natural,md,nd";
  std::string report_path;
  auto* evalfill = app.add_subcommand("evalfill", "compare symbolic fill across orderings");
  evalfill->add_option("--input", eo.input)->required();
  evalfill->add_option("--orderings", orderings, "comma list of natural|md|nd");
  evalfill->add_option("--out", report_path);
  evalfill->add_option("--checkpoint", eo.refine_ckpt);
  evalfill->add_option("--edge-checkpoint", eo.edge_ckpt);
  evalfill->add_option("--coarse-checkpoint", eo.coarse_ckpt);
  evalfill->add_option("--balance-cap", eo.balance_cap);
  evalfill->add_option("--seed", eo.seed);
  evalfill->add_option("--n-min", eo.n_min);
  evalfill->add_option("--k-hops", eo.k_hops);

  // ---- gen-dataset ----
  std::string gen_kind = "delaunay", gen_out;
  std::string gen_mtx_dir;
  int gen_n_min = 100, gen_n_max = 1000, gen_count = 50;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-dataset", "write a training dataset to a directory");
  gen->add_option("--kind", gen_kind, "delaunay | matrix-dir");
  gen->add_option("--mtx-dir", gen_mtx_dir, "source directory for matrix-dir");
  gen->add_option("--n-min", gen_n_min);
  gen->add_option("--n-max", gen_n_max);
  gen->add_option("--count", gen_count);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      if (return_order == "literal")
        tc.return_order = ReturnOrder::PastAccumulated;
      else if (return_order != "togo") {
        std::cerr << "error: unknown return order " << return_order << "\n";
        return 2;
      }
      if (out_ckpt.empty())
        out_ckpt = default_checkpoint_dir() + "/rlpart_" + train_task + ".ckpt";
      return cmd_train(train_task, mtx_dir, use_delaunay, epochs, tc, ds_n_min, ds_n_max,
                       ds_count, out_ckpt, train_log);
    }

    if (partition->parsed()) {
      Graph g = load_graph(po.input);
      auto refine = load_refine(po.refine_ckpt, TaskKind::EdgeRefine, 5);
      auto coarse = load_coarse(po.coarse_ckpt);
      RefineConfig cfg = make_refine_config(po, coarse.has_value());
      Bisection b = edge_separator(g, cfg, refine ? &*refine : nullptr,
                                   coarse ? &*coarse : nullptr);
      write_partition(b, po.output);
      std::cout << "n=" << g.num_nodes() << " m=" << g.num_edges() << " cut=" << b.cut()
                << " nc=" << b.normalized_cut() << " balance=" << b.volume_balance() << "\n";
      return 0;
    }

    if (separator->parsed()) {
      Graph g = load_graph(so.input);
      auto refine = load_refine(so.refine_ckpt, TaskKind::VertexRefine, 7);
      auto coarse = load_coarse(so.coarse_ckpt);
      RefineConfig cfg = make_refine_config(so, coarse.has_value());
      Separator3 s = vertex_separator(g, cfg, refine ? &*refine : nullptr,
                                      coarse ? &*coarse : nullptr);
      write_separator(s, so.output);
      const int na = s.count(Part3::A), nb = s.count(Part3::B);
      std::cout << "n=" << g.num_nodes() << " |S|=" << s.count(Part3::S) << " |A|=" << na
                << " |B|=" << nb << " ns=" << s.normalized_separator() << " card_balance="
                << (na && nb ? static_cast<double>(std::max(na, nb)) / std::min(na, nb) : 0.0)
                << "\n";
      return 0;
    }

    if (order->parsed()) {
      SparsePattern pattern = read_matrix_market(oo.input);
      Permutation p;
      if (method == "natural") {
        p = Permutation::identity(pattern.size());
      } else if (method == "md") {
        p = minimum_degree(pattern.adj);
      } else if (method == "nd") {
        auto refine = load_refine(oo.refine_ckpt, TaskKind::VertexRefine, 7);
        auto edge = load_refine(oo.edge_ckpt, TaskKind::EdgeRefine, 5);
        auto coarse = load_coarse(oo.coarse_ckpt);
        RefineConfig cfg = make_refine_config(oo, coarse.has_value());
        p = nested_dissection(pattern.adj, oo.n_min,
                              make_nd_provider(cfg, refine ? &*refine : nullptr,
                                               edge ? &*edge : nullptr,
                                               coarse ? &*coarse : nullptr));
      } else {
        std::cerr << "error: unknown method " << method << "\n";
        return 2;
      }
      write_permutation(p, oo.output);
      FillStats st = symbolic_fill(pattern, p);
      std::cout << "n=" << pattern.size() << " nnz=" << pattern.nnz() << " method=" << method
                << " factor_nnz=" << st.nnz_factor << " fill=" << st.fill
                << " lu_nnz=" << st.lu_nnz(pattern.size()) << "\n";
      return 0;
    }

    if (evalfill->parsed()) {
      SparsePattern pattern = read_matrix_market(eo.input);
      std::vector<std::string> names;
      {
        std::stringstream ss(orderings);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!item.empty()) names.push_back(item);
      }
      if (names.size() < 2) {
        std::cerr << "error: evalfill compares at least two orderings\n";
        return 2;
      }
      std::ostream* out = &std::cout;
      std::ofstream file;
      if (!report_path.empty()) {
        file.open(report_path);
        if (!file) throw IoError("cannot open report: " + report_path);
        out = &file;
      }
      const std::string matrix_id = std::filesystem::path(eo.input).stem().string();
      *out << "# matrix_id n nnz ordering factor_nnz fill wall_time_s\n";
      for (const auto& name : names) {
        const double t0 = now_seconds();
        Permutation p;
        if (name == "natural") {
          p = Permutation::identity(pattern.size());
        } else if (name == "md") {
          p = minimum_degree(pattern.adj);
        } else if (name == "nd") {
          auto refine = load_refine(eo.refine_ckpt, TaskKind::VertexRefine, 7);
          auto edge = load_refine(eo.edge_ckpt, TaskKind::EdgeRefine, 5);
          auto coarse = load_coarse(eo.coarse_ckpt);
          RefineConfig cfg = make_refine_config(eo, coarse.has_value());
          p = nested_dissection(pattern.adj, eo.n_min,
                                make_nd_provider(cfg, refine ? &*refine : nullptr,
                                                 edge ? &*edge : nullptr,
                                                 coarse ? &*coarse : nullptr));
        } else {
          std::cerr << "error: unknown ordering " << name << "\n";
          return 2;
        }
        FillStats st = symbolic_fill(pattern, p);
        *out << matrix_id << ' ' << pattern.size() << ' ' << pattern.nnz() << ' ' << name << ' '
             << st.nnz_factor << ' ' << st.fill << ' ' << now_seconds() - t0 << "\n";
      }
      return 0;
    }

    if (gen->parsed()) {
      namespace fs = std::filesystem;
      fs::create_directories(gen_out);
      Dataset ds;
      if (gen_kind == "delaunay") {
        ds = build_training_dataset(DatasetKind::Delaunay, "", gen_n_min, gen_n_max, gen_count,
                                    gen_seed);
      } else if (gen_kind == "matrix-dir") {
        ds = build_training_dataset(DatasetKind::MatrixDir, gen_mtx_dir, gen_n_min, gen_n_max,
                                    gen_count, gen_seed);
      } else {
        std::cerr << "error: unknown dataset kind " << gen_kind << "\n";
        return 2;
      }
      for (std::size_t i = 0; i < ds.entries.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "graph_%04zu.mtx", i);
        write_matrix_market(SparsePattern{ds.entries[i].graph}, gen_out + "/" + name);
      }
      write_dataset_manifest(ds, gen_out + "/manifest.json");
      std::cout << "wrote " << ds.entries.size() << " graphs to " << gen_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
