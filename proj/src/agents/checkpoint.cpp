#include <cstring>
#include <fstream>

#include "impl.hpp"
#include "vecfin/common/error.hpp"
#include "vecfin/nn/checkpoint.hpp"

namespace vecfin::agents {

namespace {

constexpr char kMagic[8] = {'V', 'F', 'A', 'G', 'E', 'N', 'T', '1'};
constexpr int kFormatVersion = 1;

}  // namespace

void write_agent(std::ostream& out, const Agent& agent) {
    nlohmann::json header{
        {"format_version", kFormatVersion},
        {"config", agent.config()},
        {"env", agent.env_config()},
        {"normalizer", agent.normalizer()},
        {"num_assets", agent.space().num_assets},
        {"num_features", agent.space().num_features},
        {"seed", agent.meta().seed},
        {"meta", agent.meta()},
        {"policy_version", agent.policy_version()},
        {"networks", agent.network_names()},
        {"extra", agent.extra_state()},
    };
    const std::string text = header.dump();
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const nn::Mlp* net : agent.networks()) {
        nn::write_mlp(out, *net);
    }
    if (!out) {
        fail(ErrorCode::IoError, "failed writing agent checkpoint");
    }
}

std::unique_ptr<Agent> read_agent(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        fail(ErrorCode::IoError, "not an agent checkpoint");
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len > (64u << 20)) {
        fail(ErrorCode::IoError, "bad agent checkpoint header length");
    }
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) {
        fail(ErrorCode::IoError, "truncated agent checkpoint header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::IoError, std::string("agent checkpoint header: ") + e.what());
    }
    if (header.value("format_version", 0) != kFormatVersion) {
        fail(ErrorCode::IoError, "unsupported agent checkpoint version");
    }
    AgentConfig config;
    from_json(header.at("config"), config);
    AgentSpace space;
    space.num_assets = header.at("num_assets").get<std::size_t>();
    space.num_features = header.at("num_features").get<std::size_t>();
    space.env_config = header.at("env").get<env::EnvConfig>();
    space.normalizer = header.at("normalizer").get<env::StateNormalizer>();
    auto agent = make_agent(config, space, header.at("seed").get<std::uint64_t>());

    const auto names = header.at("networks").get<std::vector<std::string>>();
    if (names != agent->network_names()) {
        fail(ErrorCode::IoError, "checkpoint networks do not match agent kind");
    }
    for (nn::Mlp* net : agent->networks()) {
        nn::Mlp loaded = nn::read_mlp(in);
        if (loaded.layer_sizes() != net->layer_sizes()) {
            fail(ErrorCode::ShapeMismatch, "checkpoint network shape does not match its config");
        }
        *net = std::move(loaded);
    }
    agent->load_extra_state(header.at("extra"));
    agent->meta() = header.at("meta").get<TrainingMeta>();
    agent->set_policy_version(header.at("policy_version").get<std::uint64_t>());
    return agent;
}

void save_agent(const std::filesystem::path& path, const Agent& agent) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    }
    write_agent(out, agent);
}

std::unique_ptr<Agent> load_agent(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return read_agent(in);
}

}  // namespace vecfin::agents
