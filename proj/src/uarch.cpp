#include "uica/uarch.hpp"

#include <cstdlib>

#include "uica/errors.hpp"
#include "uica/record_file.hpp"

namespace uica {

namespace {
const std::vector<std::string> kGenNames = {"SNB", "IVB", "HSW", "BDW", "SKL",
                                            "CLX", "ICL", "TGL", "RKL"};
}

int uarch_ordinal(const std::string& name) {
    for (size_t i = 0; i < kGenNames.size(); i++)
        if (kGenNames[i] == name) return static_cast<int>(i);
    throw ParseError("unknown microarchitecture name: " + name);
}

std::string uarch_gen_name(int ordinal) {
    if (ordinal < 0 || ordinal >= static_cast<int>(kGenNames.size()))
        throw ParseError("bad microarchitecture ordinal: " + std::to_string(ordinal));
    return kGenNames[ordinal];
}

std::vector<std::string> bundled_uarch_names() { return kGenNames; }

int UarchConfig::lsd_unroll_factor(int loop_uops) const {
    if (loop_uops <= 0) return 1;
    auto it = lsd_unroll_table.find(loop_uops);
    int u;
    if (it != lsd_unroll_table.end()) {
        u = it->second;
    } else {
        switch (lsd_unroll_variant) {
            case LsdUnrollVariant::none:
                u = 1;
                break;
            case LsdUnrollVariant::A:
                // unroll until the unrolled loop exceeds the issue width
                u = issue_width / loop_uops + 1;
                break;
            case LsdUnrollVariant::B:
                // unroll until the unrolled loop exceeds two issue groups
                u = 2 * issue_width / loop_uops + 1;
                break;
            case LsdUnrollVariant::C: {
                // like A, but the factor is a power of two
                u = 1;
                while (u * loop_uops <= issue_width) u *= 2;
                break;
            }
        }
    }
    while (u > 1 && u * loop_uops > idq_size) u--;
    return u < 1 ? 1 : u;
}

void validate_config(const UarchConfig& cfg) {
    auto check = [&](bool ok, const std::string& what) {
        if (!ok)
            throw ValidationError("config '" + cfg.name + "': " + what +
                                  " outside the supported range");
    };
    uarch_ordinal(cfg.name);  // must be a known generation
    check(cfg.iq_size >= 20 && cfg.iq_size <= 25, "iq_size");
    check(cfg.idq_size >= 28 && cfg.idq_size <= 70, "idq_size");
    check(cfg.rob_size >= 168 && cfg.rob_size <= 352, "rob_size");
    check(cfg.scheduler_size >= 54 && cfg.scheduler_size <= 160, "scheduler_size");
    check(cfg.n_ports >= 6 && cfg.n_ports <= 10, "n_ports");
    check(cfg.retire_width >= 4 && cfg.retire_width <= 8, "retire_width");
    check(cfg.issue_width == 4 || cfg.issue_width == 5, "issue_width");
    check(cfg.dsb_bandwidth >= 4 && cfg.dsb_bandwidth <= 6, "dsb_bandwidth");
    check(cfg.predecode_width == 5, "predecode_width");
    check(cfg.lcp_penalty == 3, "lcp_penalty");
    check(cfg.dispatch_delay_min == 5, "dispatch_delay_min");
    check(cfg.dsb_block_bytes == 32 || cfg.dsb_block_bytes == 64, "dsb_block_bytes");
    check(cfg.n_simple_decoders >= 1, "n_simple_decoders");
    check(cfg.decode_delivery_width >= 4, "decode_delivery_width");
    check(cfg.dsb_max_lines_per_block >= 1 && cfg.dsb_line_slots >= 1, "dsb line geometry");
    check(cfg.ms_delivery_width >= 1, "ms_delivery_width");
    check(cfg.elim_slots_gpr >= 0 && cfg.elim_slots_vec >= 0, "elimination slots");
    check(cfg.loads_per_cycle >= 1 && cfg.stores_per_cycle >= 1, "memory ops per cycle");
    check(cfg.load_latency >= 1 && cfg.store_forward_latency >= 0, "memory latencies");
}

UarchConfig load_config(const std::string& path) {
    auto records = parse_records_file(path);
    if (records.size() != 1)
        throw ParseError(path + ": expected exactly one config record, found " +
                         std::to_string(records.size()));
    const Record& r = records[0];
    UarchConfig c;
    c.name = r.get("name");
    c.iq_size = r.get_int("iq_size");
    c.predecode_width = r.get_int_or("predecode_width", c.predecode_width);
    c.lcp_penalty = r.get_int_or("lcp_penalty", c.lcp_penalty);
    c.idq_size = r.get_int("idq_size");
    c.n_simple_decoders = r.get_int_or("n_simple_decoders", 3);
    c.decode_delivery_width = r.get_int("decode_delivery_width");
    c.fusible_to_last_decoder = r.get_bool_or("fusible_to_last_decoder", true);
    c.dsb_bandwidth = r.get_int("dsb_bandwidth");
    c.dsb_block_bytes = r.get_int("dsb_block_bytes");
    c.dsb_max_lines_per_block = r.get_int("dsb_max_lines_per_block");
    c.dsb_line_slots = r.get_int_or("dsb_line_slots", 6);
    c.dsb_both_halves_rule = r.get_bool_or("dsb_both_halves_rule", false);
    c.jcc_erratum_workaround = r.get_bool_or("jcc_erratum_workaround", false);
    c.ms_delivery_width = r.get_int_or("ms_delivery_width", 4);
    c.ms_switch_penalty_decoder = r.get_int("ms_switch_penalty_decoder");
    c.ms_switch_penalty_dsb = r.get_int("ms_switch_penalty_dsb");
    c.lsd_enabled = r.get_bool_or("lsd_enabled", false);
    std::string variant = r.get_or("lsd_unroll_variant", "none");
    if (variant == "none")
        c.lsd_unroll_variant = LsdUnrollVariant::none;
    else if (variant == "A")
        c.lsd_unroll_variant = LsdUnrollVariant::A;
    else if (variant == "B")
        c.lsd_unroll_variant = LsdUnrollVariant::B;
    else if (variant == "C")
        c.lsd_unroll_variant = LsdUnrollVariant::C;
    else
        r.fail("unknown lsd_unroll_variant '" + variant + "'");
    if (auto tbl = r.find("lsd_unroll_table")) {
        for (const auto& pairstr : split(*tbl, ' ')) {
            if (trim(pairstr).empty()) continue;
            auto kv = split(trim(pairstr), ':');
            if (kv.size() != 2) r.fail("lsd_unroll_table entries must be 'uops:factor'");
            c.lsd_unroll_table[std::stoi(kv[0])] = std::stoi(kv[1]);
        }
    }
    c.issue_width = r.get_int("issue_width");
    c.move_elim_gpr = r.get_bool_or("move_elim_gpr", false);
    c.move_elim_vec = r.get_bool_or("move_elim_vec", false);
    c.elim_slots_gpr = r.get_int_or("elim_slots_gpr", 4);
    c.elim_slots_vec = r.get_int_or("elim_slots_vec", 4);
    c.rob_size = r.get_int("rob_size");
    c.retire_width = r.get_int("retire_width");
    c.scheduler_size = r.get_int("scheduler_size");
    c.n_ports = r.get_int("n_ports");
    c.dispatch_delay_min = r.get_int_or("dispatch_delay_min", 5);
    c.loads_per_cycle = r.get_int("loads_per_cycle");
    c.stores_per_cycle = r.get_int("stores_per_cycle");
    c.load_latency = r.get_int("load_latency");
    c.store_forward_latency = r.get_int("store_forward_latency");
    validate_config(c);
    return c;
}

std::string default_data_dir() {
    if (const char* env = std::getenv("UICA_DATA_DIR"); env && *env) return env;
#ifdef UICA_SOURCE_DATA_DIR
    return UICA_SOURCE_DATA_DIR;
#else
    return "data";
#endif
}

}  // namespace uica
