#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "stde/error.hpp"

using namespace stde::cli;

namespace {

CLI::App* subcommand(CLI::App& app, const std::string& name, const std::string& help, std::string& out_dir) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->set_config("--config", "", "flat key = value file; flags override it");
    sub->add_option("--out-dir", out_dir, "directory for relative outputs (default $STDE_OUT_DIR, else cwd)");
    return sub;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vehicle strand segmentation on spatial-temporal maps"};
    app.require_subcommand(1);
    std::function<int()> run;

    SynthOptions syn;
    auto* s = subcommand(app, "synth", "generate a synthetic dataset with a split manifest", syn.out_dir);
    s->add_option("--count", syn.count, "number of scenes (>= 5)")->capture_default_str();
    s->add_option("--seed", syn.seed)->capture_default_str();
    s->add_option("--height", syn.height)->capture_default_str();
    s->add_option("--width", syn.width)->capture_default_str();
    s->add_option("--vehicles", syn.vehicles, "max strands per scene")->capture_default_str();
    s->add_option("--min-vehicles", syn.min_vehicles)->capture_default_str();
    s->add_option("--regime", syn.regime, "mixed, free-flow, oscillation or stop-and-go")->capture_default_str();
    s->add_option("--min-thickness", syn.min_thickness)->capture_default_str();
    s->add_option("--max-thickness", syn.max_thickness)->capture_default_str();
    s->add_option("--shadow-probability", syn.shadow_probability)->capture_default_str();
    s->add_option("--shadow-offset", syn.shadow_offset)->capture_default_str();
    s->add_option("--lane-markings", syn.lane_markings, "rows drawn as lane markings");
    s->add_option("--noise", syn.noise, "per-pixel noise amplitude")->capture_default_str();
    s->add_option("--name", syn.subdir, "dataset directory under the output directory")->capture_default_str();
    s->callback([&] { run = [&] { return cmd_synth(syn); }; });

    StmapOptions stm;
    auto* m = subcommand(app, "stmap", "build an STMap from video frames along a scanline", stm.out_dir);
    m->add_option("--frames", stm.frames, "frame pack file or directory of .ppm frames")->required();
    m->add_option("--scanline", stm.waypoints, "x0 y0 x1 y1 [x2 y2 ...] in frame pixels")->required();
    m->add_option("--frame-rate", stm.frame_rate)->capture_default_str();
    m->add_option("-o,--output", stm.output)->capture_default_str();
    m->callback([&] { run = [&] { return cmd_stmap(stm); }; });

    TrainOptions tr;
    auto* t = subcommand(app, "train", "train the embedding network on a synth dataset", tr.out_dir);
    t->add_option("--data", tr.data, "dataset directory containing manifest.txt")->required();
    t->add_option("--iterations", tr.iterations)->capture_default_str();
    t->add_option("--batch-size", tr.batch_size)->capture_default_str();
    t->add_option("--lr", tr.learning_rate)->capture_default_str();
    t->add_option("--beta1", tr.beta1)->capture_default_str();
    t->add_option("--beta2", tr.beta2)->capture_default_str();
    t->add_option("--epsilon", tr.epsilon)->capture_default_str();
    t->add_option("--seed", tr.seed, "initialization and batch order")->capture_default_str();
    t->add_option("--validate-every", tr.validate_every)->capture_default_str();
    t->add_option("--alpha", tr.alpha)->capture_default_str();
    t->add_option("--beta", tr.beta)->capture_default_str();
    t->add_option("--gamma", tr.gamma)->capture_default_str();
    t->add_option("--delta", tr.delta)->capture_default_str();
    t->add_option("--tau", tr.tau)->capture_default_str();
    t->add_flag("--plain-mse", tr.plain_mse, "unweighted affinity MSE");
    t->add_option("--ranges", tr.ranges)->capture_default_str();
    t->add_option("--widths", tr.widths)->capture_default_str();
    t->add_option("--embedding-dim", tr.embedding_dim)->capture_default_str();
    t->add_option("--init-gain", tr.init_gain)->capture_default_str();
    t->add_option("--min-size", tr.min_size, "segment size floor for validation (< 0: default)");
    t->add_flag("--record-wall-time", tr.record_wall_time, "log wall time (breaks byte-identical logs)");
    t->add_option("--checkpoint", tr.checkpoint, "best-validation checkpoint")->capture_default_str();
    t->add_option("--final-checkpoint", tr.final_checkpoint, "also save the last iterate");
    t->add_option("--log", tr.log)->capture_default_str();
    t->add_option("--validation-log", tr.validation_log)->capture_default_str();
    t->callback([&] { run = [&] { return cmd_train(tr); }; });

    InferOptions inf;
    auto* i = subcommand(app, "infer", "predict pixel affinities for an STMap", inf.out_dir);
    i->add_option("--checkpoint", inf.checkpoint);
    i->add_option("--stmap", inf.stmap);
    i->add_option("--oracle-labels", inf.oracle_labels, "write the ground-truth affinity of a label map instead");
    i->add_option("--ranges", inf.ranges, "ranges for --oracle-labels")->capture_default_str();
    i->add_option("-o,--output", inf.output)->capture_default_str();
    i->add_option("--embedding-image", inf.embedding_image, "PPM of the embedding's first three principal axes");
    i->callback([&] { run = [&] { return cmd_infer(inf); }; });

    SegmentOptions seg;
    auto* g = subcommand(app, "segment", "cluster an affinity tensor into strand instances", seg.out_dir);
    g->add_option("--affinity", seg.affinity)->required();
    g->add_option("--min-size", seg.min_size, "merge smaller segments (< 0: scaled default)");
    g->add_option("--attractive-max-range", seg.attractive_max_range)->capture_default_str();
    g->add_flag("--no-long-range-attraction", seg.no_long_range_attraction);
    g->add_option("-o,--output", seg.output)->capture_default_str();
    g->callback([&] { run = [&] { return cmd_segment(seg); }; });

    TrajOptions tj;
    auto* j = subcommand(app, "traj", "extract bumper trajectories from a label map", tj.out_dir);
    j->add_option("--labels", tj.labels)->required();
    j->add_option("--bumper", tj.bumper, "front or rear")->capture_default_str();
    j->add_option("--camera", tj.camera, "camera 1-8; overrides --bumper");
    j->add_flag("--decreasing-row", tj.decreasing_row, "vehicles travel toward row 0");
    j->add_option("--box-height", tj.box_height)->capture_default_str();
    j->add_option("--box-width", tj.box_width)->capture_default_str();
    j->add_option("--frame-rate", tj.frame_rate);
    j->add_option("-o,--output", tj.output)->capture_default_str();
    j->callback([&] { run = [&] { return cmd_traj(tj); }; });

    EvalOptions ev;
    auto* e = subcommand(app, "eval", "compare predicted and ground-truth label maps", ev.out_dir);
    e->add_option("--pred", ev.pred)->required();
    e->add_option("--gt", ev.gt)->required();
    e->add_option("--bf-tolerance", ev.bf_tolerance, "pixels (< 0: default for the scene size)");
    e->add_option("--csv", ev.csv, "per-scene CSV rows plus the mean");
    e->callback([&] { run = [&] { return cmd_eval(ev); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        std::cerr << "stde: " << ex.what() << "\n";
        return kUsage;
    }

    try {
        return run();
    } catch (const stde::InvalidArgument& ex) {
        std::cerr << "stde: invalid argument: " << ex.what() << "\n";
        return kUsage;
    } catch (const std::exception& ex) {
        std::cerr << "stde: error: " << ex.what() << "\n";
        return kDataError;
    }
}
