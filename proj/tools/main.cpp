#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

using namespace dragan::cli;

int main(int argc, char** argv) {
  CLI::App app{"Dense residual attention GAN toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* g = app.add_subcommand("gen-data", "Write a procedural toy traffic-sign dataset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Dataset seed");
  g->add_option("--classes", gen.classes, "Classes per category");
  g->add_option("--scenes", gen.scenes, "Scenes per class");
  g->add_option("--categories", gen.categories, "white_triangle, white_circle, blue_rectangle")->delimiter(',');
  g->add_flag("--high-skew", gen.high_skew, "Allow up to 50 degrees of tilt");

  TrainArgs tr;
  int64_t iters = 0, stop_at = 0;
  uint64_t seed = 0;
  std::string resume, config;
  auto* t = app.add_subcommand("train", "Train the generator and critics");
  t->add_option("--data", tr.data, "Dataset directory or manifest")->required();
  t->add_option("--out", tr.out, "Run directory (checkpoints, metrics.log)")->required();
  auto* o_iters = t->add_option("--iters", iters, "Iteration count (with --resume: train until this iteration)");
  auto* o_seed = t->add_option("--seed", seed, "Training seed");
  t->add_option("--ablate", tr.ablate, "Turn one component off")
      ->check(CLI::IsMember({"dra", "multiscale", "mask", "none"}));
  auto* o_resume = t->add_option("--resume", resume, "Continue from a checkpoint");
  auto* o_config = t->add_option("--config", config, "key = value config file");
  t->add_option("--set", tr.set, "Override a config key (key=value), repeatable");
  auto* o_stop = t->add_option("--stop-at", stop_at, "Stop after this iteration");
  t->add_flag("--train-split", tr.train_split, "Train on the non-held-out scenes only");
  t->add_flag("--quiet", tr.quiet, "Only report errors");

  GenerateArgs ge;
  auto* gn = app.add_subcommand("generate", "Retarget one image to a pictogram (no mask)");
  gn->add_option("--ckpt", ge.ckpt)->required();
  gn->add_option("--image", ge.image)->required();
  gn->add_option("--pictogram", ge.pictogram)->required();
  gn->add_option("--out", ge.out)->required();
  gn->add_flag("--resize", ge.resize, "Resample inputs to the model resolution");

  GridArgs gr;
  auto* gd = app.add_subcommand("grid", "Contact sheet of (input, pictogram, output) triplets");
  gd->add_option("--ckpt", gr.ckpt)->required();
  gd->add_option("--manifest", gr.manifest)->required();
  gd->add_option("--rows", gr.rows);
  gd->add_option("--cols", gr.cols);
  gd->add_option("--out", gr.out)->required();
  gd->add_option("--seed", gr.seed);

  GradcheckArgs gc;
  auto* gk = app.add_subcommand("gradcheck", "Finite-difference gradient suites");
  gk->add_option("--scope", gc.scope, "ops, blocks, gp or generator");
  gk->add_option("--dtype", gc.dtype, "f64");

  EvalArgs ev;
  std::string report;
  auto* e = app.add_subcommand("eval", "Background PSNR and class-transfer accuracy");
  e->add_option("--ckpt", ev.ckpt)->required();
  e->add_option("--manifest", ev.manifest)->required();
  e->add_option("--seed", ev.seed);
  e->add_option("--classifier-epochs", ev.classifier_epochs);
  e->add_flag("--untrained", ev.untrained, "Score a freshly initialized generator");
  auto* o_report = e->add_option("--report", report, "Also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : kUsage;
  }

  if (*g) return cmd_gen_data(gen, std::cout, std::cerr);
  if (*t) {
    if (*o_iters) tr.iters = iters;
    if (*o_seed) tr.seed = seed;
    if (*o_resume) tr.resume = resume;
    if (*o_config) tr.config = config;
    if (*o_stop) tr.stop_at = stop_at;
    return cmd_train(tr, std::cout, std::cerr);
  }
  if (*gn) return cmd_generate(ge, std::cout, std::cerr);
  if (*gd) return cmd_grid(gr, std::cout, std::cerr);
  if (*gk) return cmd_gradcheck(gc, std::cout, std::cerr);
  if (*o_report) ev.report = report;
  return cmd_eval(ev, std::cout, std::cerr);
}
