#pragma once

// JSON-over-HTTP API around the library. Every session keeps an append-only
// operation log under the state root; a restarted server replays it.
//
//   POST   /sessions                          {"dag": text?}
//   GET    /sessions/{id}
//   PUT    /sessions/{id}/dag                 {"dag": text, "base_fingerprint": fp}
//   POST   /sessions/{id}/edits               {"edit": {...}, "base_fingerprint": fp}
//   GET    /sessions/{id}/implications
//   PUT    /sessions/{id}/dataset             CSV body
//   POST   /sessions/{id}/evaluations         {"config": {...}}  -> NDJSON stream
//   POST   /sessions/{id}/refinement          {"config": {...}, "max_iterations": n}
//   POST   /sessions/{id}/refinement/abort
//   GET    /sessions/{id}/proposals
//   POST   /sessions/{id}/proposals/choose    {"index": i, "base_fingerprint": fp}
//   GET    /sessions/{id}/journal

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "cidag/dataset.hpp"
#include "cidag/graph.hpp"
#include "cidag/implications.hpp"
#include "cidag/refinement.hpp"
#include "cidag/report.hpp"
#include "cidag/stats.hpp"

namespace cidag {

/// Error carried to the client as {"error": code, "message": ...}.
class HttpError : public Error {
public:
    HttpError(int status, std::string code, const std::string& message)
        : Error(message), status_(status), code_(std::move(code)) {}
    int status() const noexcept { return status_; }
    const std::string& code() const noexcept { return code_; }

private:
    int status_;
    std::string code_;
};

class Service {
public:
    /// Empty state_root disables persistence.
    explicit Service(std::filesystem::path state_root = {}) : root_(std::move(state_root)) {
        if (!root_.empty()) restore();
    }

    std::size_t session_count() const {
        std::lock_guard lock(mu_);
        return sessions_.size();
    }

    void mount(httplib::Server& svr) {
        const std::string id = "/sessions/([0-9a-f]+)";
        svr.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res, const std::string&) {
                     create(req, res);
                 }));
        svr.Get(id, wrap([this](const httplib::Request&, httplib::Response& res, const std::string& sid) {
                    auto s = find(sid);
                    std::lock_guard lock(s->mu);
                    send(res, 200, describe(*s));
                }));
        svr.Put(id + "/dag", wrap([this](const httplib::Request& req, httplib::Response& res, const std::string& sid) {
                    put_dag(req, res, sid);
                }));
        svr.Post(id + "/edits", wrap([this](const httplib::Request& req, httplib::Response& res, const std::string& sid) {
                     post_edit(req, res, sid);
                 }));
        svr.Get(id + "/implications", wrap([this](const httplib::Request&, httplib::Response& res, const std::string& sid) {
                    auto s = find(sid);
                    std::lock_guard lock(s->mu);
                    res.status = 200;
                    res.set_content(json_text(to_json(implied_independencies(s->dag))), "application/json");
                }));
        svr.Put(id + "/dataset", wrap([this](const httplib::Request& req, httplib::Response& res, const std::string& sid) {
                    put_dataset(req, res, sid);
                }));
        svr.Post(id + "/evaluations",
                 wrap([this](const httplib::Request& req, httplib::Response& res, const std::string& sid) {
                     post_evaluation(req, res, sid);
                 }));
        svr.Post(id + "/refinement",
                 wrap([this](const httplib::Request& req, httplib::Response& res, const std::string& sid) {
                     start_refinement(req, res, sid);
                 }));
        svr.Post(id + "/refinement/abort",
                 wrap([this](const httplib::Request&, httplib::Response& res, const std::string& sid) {
                     auto s = find(sid);
                     std::lock_guard lock(s->mu);
                     if (!s->refiner) throw HttpError(400, "no_refinement", "no refinement has been started");
                     apply_op(*s, {{"op", "abort"}});
                     send(res, 200, refinement_state(*s));
                 }));
        svr.Get(id + "/proposals", wrap([this](const httplib::Request& req, httplib::Response& res, const std::string& sid) {
                    get_proposals(req, res, sid);
                }));
        svr.Post(id + "/proposals/choose",
                 wrap([this](const httplib::Request& req, httplib::Response& res, const std::string& sid) {
                     choose(req, res, sid);
                 }));
        svr.Get(id + "/journal", wrap([this](const httplib::Request&, httplib::Response& res, const std::string& sid) {
                    auto s = find(sid);
                    std::lock_guard lock(s->mu);
                    if (!s->refiner) throw HttpError(400, "no_refinement", "no refinement has been started");
                    auto rep = render_report(s->refiner->session());
                    ordered_json j;
                    j["dag_fingerprint"] = dag_fingerprint(s->dag);
                    j["journal"] = rep.json;
                    j["narrative"] = rep.text;
                    send(res, 200, j);
                }));
    }

private:
    struct Session {
        std::string id;
        std::mutex mu;
        CausalDag dag;
        std::shared_ptr<const DatasetTable> data;
        std::string data_digest;
        std::unique_ptr<Refiner> refiner;
        std::vector<ordered_json> ops;
        std::map<std::string, Evaluation> evaluations;  // by fingerprint/dataset/config
    };

    using Handler = std::function<void(const httplib::Request&, httplib::Response&, const std::string&)>;

    static void send(httplib::Response& res, int status, const ordered_json& body) {
        res.status = status;
        res.set_content(json_text(body), "application/json");
    }

    static httplib::Server::Handler wrap(Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            auto fail = [&](int status, const std::string& code, const std::string& msg) {
                ordered_json j;
                j["error"] = code;
                j["message"] = msg;
                send(res, status, j);
            };
            try {
                h(req, res, req.matches.size() > 1 ? req.matches[1].str() : std::string());
            } catch (const HttpError& e) {
                fail(e.status(), e.code(), e.what());
            } catch (const nlohmann::json::exception& e) {
                fail(400, "malformed_payload", e.what());
            } catch (const ParseError& e) {
                fail(400, "parse_error", e.what());
            } catch (const CycleError& e) {
                fail(400, "cycle", e.what());
            } catch (const GraphError& e) {
                fail(400, "invalid_graph", e.what());
            } catch (const UnknownVariable& e) {
                fail(400, "unknown_variable", e.what());
            } catch (const DataError& e) {
                fail(400, "data_error", e.what());
            } catch (const InvalidArgument& e) {
                fail(400, "invalid_argument", e.what());
            } catch (const std::exception& e) {
                fail(500, "internal", e.what());
            }
        };
    }

    static ordered_json body_json(const httplib::Request& req) {
        if (req.body.empty()) return ordered_json::object();
        auto j = ordered_json::parse(req.body);
        if (!j.is_object()) throw HttpError(400, "malformed_payload", "expected a JSON object");
        return j;
    }

    std::shared_ptr<Session> find(const std::string& sid) {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(sid);
        if (it == sessions_.end()) throw HttpError(404, "unknown_session", "no session '" + sid + "'");
        return it->second;
    }

    static void check_base(const Session& s, const ordered_json& body) {
        if (!body.contains("base_fingerprint")) return;
        const auto base = body.at("base_fingerprint").get<std::string>();
        const auto current = dag_fingerprint(s.dag);
        if (base != current)
            throw HttpError(409, "fingerprint_mismatch",
                            "DAG changed: client has " + base + ", server has " + current);
    }

    ordered_json describe(const Session& s) const {
        ordered_json j;
        j["id"] = s.id;
        j["dag_fingerprint"] = dag_fingerprint(s.dag);
        j["dag"] = serialize_dag(s.dag);
        j["dataset_digest"] = s.data ? ordered_json(s.data_digest) : ordered_json(nullptr);
        j["refinement_status"] = s.refiner ? ordered_json(to_string(s.refiner->session().status)) : ordered_json(nullptr);
        return j;
    }

    // Every mutation goes through here: validate, apply, then persist.
    void apply_op(Session& s, const ordered_json& op, bool persist = true) {
        const auto kind = op.at("op").get<std::string>();
        if (kind == "create" || kind == "set_dag") {
            s.dag = parse_dag(op.at("dag").get<std::string>());
            if (s.refiner) s.refiner->abort();  // a manual change ends the running session
        } else if (kind == "edit") {
            s.dag = apply_edit(s.dag, edit_from_json(op.at("edit")));
            if (s.refiner) s.refiner->abort();
        } else if (kind == "dataset") {
            const auto digest = op.at("digest").get<std::string>();
            if (!op.contains("csv")) {
                s.data = std::make_shared<DatasetTable>(load_csv((root_ / "datasets" / (digest + ".csv")).string()));
            } else {
                s.data = std::make_shared<DatasetTable>(parse_csv(op.at("csv").get<std::string>()));
            }
            s.data_digest = digest;
        } else if (kind == "refine") {
            if (!s.data) throw HttpError(400, "no_dataset", "upload a dataset before refining");
            auto config = config_from_json(op.value("config", ordered_json()));
            auto max_it = op.value("max_iterations", std::size_t{25});
            s.refiner = std::make_unique<Refiner>(s.dag, *s.data, config, max_it);
            s.dag = s.refiner->current();
        } else if (kind == "choose") {
            if (!s.refiner || s.refiner->finished())
                throw HttpError(400, "no_pending_decision", "no refinement decision is pending");
            s.refiner->choose(op.at("index").get<std::size_t>(), Decider::human);
            s.dag = s.refiner->current();
        } else if (kind == "abort") {
            s.refiner->abort();
        } else {
            throw InvalidArgument("unknown operation '" + kind + "'");
        }
        if (!persist) return;
        auto stored = op;
        if (kind == "dataset" && stored.contains("csv")) {
            if (!root_.empty()) {
                std::filesystem::create_directories(root_ / "datasets");
                std::ofstream(root_ / "datasets" / (s.data_digest + ".csv")) << stored.at("csv").get<std::string>();
            }
            stored.erase("csv");
        }
        s.ops.push_back(stored);
        if (!root_.empty()) {
            std::filesystem::create_directories(root_ / "sessions");
            std::ofstream(root_ / "sessions" / (s.id + ".jsonl"), std::ios::app) << stored.dump() << "\n";
        }
    }

    void restore() {
        const auto dir = root_ / "sessions";
        if (!std::filesystem::exists(dir)) return;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() != ".jsonl") continue;
            auto s = std::make_shared<Session>();
            s->id = entry.path().stem().string();
            std::ifstream in(entry.path());
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto op = ordered_json::parse(line);
                apply_op(*s, op, false);
                s->ops.push_back(op);
            }
            sessions_[s->id] = s;
        }
    }

    std::string new_id() {
        std::uniform_int_distribution<std::uint64_t> dist;
        for (;;) {
            auto id = hex64(dist(rng_));
            if (!sessions_.count(id)) return id;
        }
    }

    void create(const httplib::Request& req, httplib::Response& res) {
        auto body = body_json(req);
        auto s = std::make_shared<Session>();
        {
            std::lock_guard lock(mu_);
            s->id = new_id();
        }
        apply_op(*s, {{"op", "create"}, {"dag", body.value("dag", std::string())}});
        {
            std::lock_guard lock(mu_);
            sessions_[s->id] = s;
        }
        send(res, 201, describe(*s));
    }

    void put_dag(const httplib::Request& req, httplib::Response& res, const std::string& sid) {
        auto s = find(sid);
        auto body = body_json(req);
        std::lock_guard lock(s->mu);
        check_base(*s, body);
        apply_op(*s, {{"op", "set_dag"}, {"dag", body.at("dag").get<std::string>()}});
        send(res, 200, describe(*s));
    }

    void post_edit(const httplib::Request& req, httplib::Response& res, const std::string& sid) {
        auto s = find(sid);
        auto body = body_json(req);
        std::lock_guard lock(s->mu);
        check_base(*s, body);
        auto edit = edit_from_json(body.at("edit"));
        apply_op(*s, {{"op", "edit"}, {"edit", to_json(edit)}});
        send(res, 200, describe(*s));
    }

    void put_dataset(const httplib::Request& req, httplib::Response& res, const std::string& sid) {
        auto s = find(sid);
        auto table = parse_csv(req.body);
        std::lock_guard lock(s->mu);
        auto digest = dataset_digest(table);
        apply_op(*s, {{"op", "dataset"}, {"digest", digest}, {"csv", to_csv(table)}});
        ordered_json j;
        j["dag_fingerprint"] = dag_fingerprint(s->dag);
        j["dataset_digest"] = digest;
        j["rows"] = s->data->row_count();
        j["dropped_rows"] = table.dropped_rows();
        j["columns"] = s->data->names();
        send(res, 200, j);
    }

    void post_evaluation(const httplib::Request& req, httplib::Response& res, const std::string& sid) {
        auto s = find(sid);
        auto body = body_json(req);
        auto config = config_from_json(body.value("config", ordered_json()));
        std::unique_lock lock(s->mu);
        if (!s->data) throw HttpError(400, "no_dataset", "upload a dataset before running an evaluation");
        require_coverage(*s->data, s->dag);
        const auto dag = s->dag;
        const auto data = s->data;
        const auto key = dag_fingerprint(dag) + "/" + s->data_digest + "/" + config_digest(config);
        std::optional<Evaluation> cached;
        if (auto it = s->evaluations.find(key); it != s->evaluations.end()) cached = it->second;
        lock.unlock();

        // Each claim is written as soon as it is tested; the last line carries the summary.
        res.status = 200;
        res.set_chunked_content_provider(
            "application/x-ndjson",
            [s, dag, data, config, key, cached](std::size_t, httplib::DataSink& sink) {
                auto emit = [&](const ordered_json& j) {
                    auto line = j.dump() + "\n";
                    return sink.write(line.data(), line.size());
                };
                const auto fp = dag_fingerprint(dag);
                Evaluation ev;
                if (cached) {
                    ev = *cached;
                    for (const auto& r : ev.results) {
                        auto j = to_json(r);
                        j["dag_fingerprint"] = fp;
                        if (!emit(j)) return false;
                    }
                } else {
                    bool open = true;
                    ev = evaluate_dag(*data, dag, config, nullptr, [&](const TestResult& r) {
                        auto j = to_json(r);
                        j["dag_fingerprint"] = fp;
                        if (open) open = emit(j);
                    });
                    std::lock_guard lock(s->mu);
                    s->evaluations.emplace(key, ev);
                }
                ordered_json done;
                done["dag_fingerprint"] = fp;
                done["summary"] = to_json(ev.summary);
                emit(done);
                sink.done();
                return true;
            });
    }

    ordered_json refinement_state(Session& s) {
        ordered_json j;
        j["dag_fingerprint"] = dag_fingerprint(s.dag);
        const auto& session = s.refiner->session();
        j["status"] = to_string(session.status);
        j["steps"] = session.steps.size();
        j["last_summary"] = to_json(session.steps.back().summary);
        j["pending"] = s.refiner->pending().has_value();
        return j;
    }

    void start_refinement(const httplib::Request& req, httplib::Response& res, const std::string& sid) {
        auto s = find(sid);
        auto body = body_json(req);
        std::lock_guard lock(s->mu);
        ordered_json op{{"op", "refine"}};
        op["config"] = to_json(config_from_json(body.value("config", ordered_json())));
        op["max_iterations"] = body.value("max_iterations", std::size_t{25});
        apply_op(*s, op);
        send(res, 200, refinement_state(*s));
    }

    void get_proposals(const httplib::Request& req, httplib::Response& res, const std::string& sid) {
        auto s = find(sid);
        std::lock_guard lock(s->mu);
        if (!s->refiner) throw HttpError(400, "no_refinement", "no refinement has been started");
        const bool with_tests = req.get_param_value("followups") != "0";
        auto j = refinement_state(*s);
        if (const auto& pending = s->refiner->pending()) {
            j["diagnosis"] = to_json(*pending);
            for (std::size_t i = 0; i < pending->candidates.size(); ++i) {
                auto& cj = j["diagnosis"]["candidates"][i];
                cj["index"] = i;
                if (!with_tests) continue;
                cj["followup_results"] = ordered_json::array();
                for (const auto& r : s->refiner->followups(i)) cj["followup_results"].push_back(to_json(r));
            }
        } else {
            j["diagnosis"] = nullptr;
        }
        send(res, 200, j);
    }

    void choose(const httplib::Request& req, httplib::Response& res, const std::string& sid) {
        auto s = find(sid);
        auto body = body_json(req);
        std::lock_guard lock(s->mu);
        if (!s->refiner) throw HttpError(400, "no_refinement", "no refinement has been started");
        check_base(*s, body);
        const auto index = body.at("index").get<std::size_t>();
        if (!s->refiner->pending() || index >= s->refiner->pending()->candidates.size())
            throw HttpError(400, "invalid_choice", "no pending proposal with index " + std::to_string(index));
        apply_op(*s, {{"op", "choose"}, {"index", index}});
        send(res, 200, refinement_state(*s));
    }

    std::filesystem::path root_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::mt19937_64 rng_{std::random_device{}()};
};

} // namespace cidag
