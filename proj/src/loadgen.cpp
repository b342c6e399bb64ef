// Copyright 2026 The svcemu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "svcemu/loadgen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include "svcemu/directory.hpp"
#include "svcemu/ldap_client.hpp"
#include "svcemu/ldap_codec.hpp"

namespace svcemu::loadgen {

namespace {

using ldap::ClientError;
using ldap::LdapClient;
using Clock = std::chrono::steady_clock;

struct StepFailure {
  std::string reason;
};

bool same_dn(std::string_view a, std::string_view b) {
  try {
    return directory::DistinguishedName::parse(a) == directory::DistinguishedName::parse(b);
  } catch (const directory::DnSyntaxError&) {
    return a == b;
  }
}

std::string result_text(const Message& m) {
  auto code = ldap::result_code(m);
  std::string s = m.shape().name() + " resultCode=" + (code ? std::to_string(static_cast<int>(*code)) : "?");
  if (auto diag = ldap::string_value(m, "diagnosticMessage"); diag && !diag->empty()) s += " (" + *diag + ")";
  return s;
}

Message expect_result(LdapClient& c, const Shape& shape, std::int64_t id, Clock::time_point deadline) {
  Message m = c.receive(deadline);
  if (m.correlation_id() != id)
    throw StepFailure{"messageID " + std::to_string(m.correlation_id()) + ", expected " + std::to_string(id)};
  if (m.shape() != shape) throw StepFailure{"got " + m.shape().name() + ", expected " + shape.name()};
  if (ldap::result_code(m) != ldap::ResultCode::kSuccess) throw StepFailure{result_text(m)};
  return m;
}

struct FoundEntry {
  std::string dn;
  ldap::AttributeList attrs;
};

std::vector<FoundEntry> run_search(LdapClient& c, std::int64_t id, const ldap::SearchRequest& rq,
                                   Clock::time_point deadline) {
  c.send(ldap::search_request(id, rq));
  std::vector<FoundEntry> out;
  for (;;) {
    Message m = c.receive(deadline);
    if (m.correlation_id() != id)
      throw StepFailure{"messageID " + std::to_string(m.correlation_id()) + ", expected " + std::to_string(id)};
    if (m.shape() == ldap::shape::search_entry()) {
      FoundEntry e;
      e.dn = ldap::string_value(m, "objectName").value_or("");
      if (auto v = lookup_assoc(m, "attributes")) e.attrs = ldap::as_attribute_list(*v).value_or(ldap::AttributeList{});
      out.push_back(std::move(e));
      continue;
    }
    if (m.shape() != ldap::shape::search_done()) throw StepFailure{"unexpected " + m.shape().name() + " in search"};
    if (ldap::result_code(m) != ldap::ResultCode::kSuccess) throw StepFailure{result_text(m)};
    return out;
  }
}

std::vector<std::string> attr_values(const FoundEntry& e, std::string_view name) {
  for (const auto& [type, vals] : e.attrs) {
    if (type.size() == name.size() &&
        std::equal(type.begin(), type.end(), name.begin(),
                   [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) ==
                                               std::tolower(static_cast<unsigned char>(b)); }))
      return vals;
  }
  return {};
}

double ms_since(Clock::time_point t) { return std::chrono::duration<double, std::milli>(Clock::now() - t).count(); }

std::string format_ms(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

}  // namespace

std::vector<Target> port_range_targets(const std::string& host, int base_port, std::size_t n) {
  std::vector<Target> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, host, static_cast<std::uint16_t>(base_port + static_cast<int>(i))});
  return t;
}

std::string EndpointReport::verdict() const {
  return pass ? "pass" : "fail:step" + std::to_string(failed_step) + ":" + reason;
}

std::size_t expected_messages(int seed_users) {
  const std::size_t structural = 2;  // base entry and ou=people
  const std::size_t requests = 8;
  const std::size_t responses = 1                                          // BindRes
                                + (static_cast<std::size_t>(seed_users) + structural) + 1  // whole directory
                                + 1                                        // AddRes
                                + 1 + 1                                    // new entry + done
                                + 1                                        // ModRes
                                + 1 + 1                                    // verified entry + done
                                + 1;                                       // DelRes
  return requests + responses;
}

EndpointReport run_endpoint(const WorkloadSpec& spec, const Target& target) {
  EndpointReport r;
  r.endpoint = target.index;
  const auto start = Clock::now();
  const std::string people = "ou=" + spec.people_ou + "," + spec.base_dn;
  const std::string new_dn = "uid=lg-" + std::to_string(target.index) + "," + people;
  const std::string new_pw = "changed-" + std::to_string(target.index);

  std::optional<LdapClient> client;
  int step = 0;
  Clock::time_point t;
  auto deadline = [&] { return Clock::now() + spec.timeout; };
  auto begin = [&](int n) {
    step = n;
    t = Clock::now();
  };
  auto end = [&] { r.step_ms[static_cast<std::size_t>(step - 1)] = ms_since(t); };

  try {
    begin(1);
    client.emplace(LdapClient::connect(target.host, target.port, spec.timeout));
    end();

    begin(2);
    client->send(ldap::bind_request(1, spec.bind_dn, spec.bind_password));
    expect_result(*client, ldap::shape::bind_res(), 1, deadline());
    end();

    begin(3);
    {
      ldap::SearchRequest rq;
      rq.base = spec.base_dn;
      rq.scope = ldap::SearchScope::kWholeSubtree;
      rq.filter = ldap::Filter::present("objectClass");
      auto entries = run_search(*client, 2, rq, deadline());
      const std::size_t want = static_cast<std::size_t>(spec.expected_seed_users) + 2;
      if (entries.size() != want)
        throw StepFailure{"whole-directory search returned " + std::to_string(entries.size()) + " entries, expected " +
                          std::to_string(want)};
    }
    end();

    begin(4);
    client->send(ldap::add_request(3, new_dn,
                                   {{"objectClass", {"top", "person", "organizationalPerson", "inetOrgPerson"}},
                                    {"uid", {"lg-" + std::to_string(target.index)}},
                                    {"cn", {"Loadgen User " + std::to_string(target.index)}},
                                    {"sn", {"Loadgen"}},
                                    {"userPassword", {"initial-" + std::to_string(target.index)}}}));
    expect_result(*client, ldap::shape::add_res(), 3, deadline());
    end();

    begin(5);
    {
      ldap::SearchRequest rq;
      rq.base = new_dn;
      rq.scope = ldap::SearchScope::kWholeSubtree;
      rq.filter = ldap::Filter::present("objectClass");
      auto entries = run_search(*client, 4, rq, deadline());
      if (entries.size() != 1 || !same_dn(entries[0].dn, new_dn))
        throw StepFailure{"subtree search at the new entry returned " + std::to_string(entries.size()) +
                          " entries, expected exactly the new entry"};
    }
    end();

    begin(6);
    client->send(ldap::modify_request(5, new_dn, {{ldap::ModOp::kReplace, {"userPassword", {new_pw}}}}));
    expect_result(*client, ldap::shape::mod_res(), 5, deadline());
    end();

    begin(7);
    {
      ldap::SearchRequest rq;
      rq.base = people;
      rq.scope = ldap::SearchScope::kSingleLevel;
      rq.filter = ldap::Filter::equality("userPassword", new_pw);
      auto entries = run_search(*client, 6, rq, deadline());
      if (entries.size() != 1)
        throw StepFailure{"verify search returned " + std::to_string(entries.size()) + " entries, expected 1"};
      if (!same_dn(entries[0].dn, new_dn)) throw StepFailure{"verify search returned " + entries[0].dn};
      const auto pw = attr_values(entries[0], "userPassword");
      if (pw.size() != 1 || pw[0] != new_pw) throw StepFailure{"modified password not visible"};
    }
    end();

    begin(8);
    client->send(ldap::delete_request(7, new_dn));
    expect_result(*client, ldap::shape::del_res(), 7, deadline());
    end();

    begin(9);
    client->send(ldap::unbind_request(8));
    if (!client->wait_for_close(deadline())) throw StepFailure{"server did not close the connection after unbind"};
    end();

    r.pass = true;
  } catch (const StepFailure& f) {
    r.failed_step = step;
    r.reason = f.reason;
  } catch (const ClientError& e) {
    r.failed_step = step;
    r.reason = ldap::to_string(e.kind());
    if (e.kind() != ClientError::Kind::Timeout) r.reason += std::string(" (") + e.what() + ")";
  } catch (const std::exception& e) {
    r.failed_step = step;
    r.reason = e.what();
  }
  if (client) {
    r.msgs_sent = client->sent();
    r.msgs_received = client->received();
  }
  r.total_ms = ms_since(start);
  return r;
}

std::vector<EndpointReport> run_workload(const WorkloadSpec& spec) {
  const std::size_t threads = std::max<std::size_t>(1, std::min(spec.threads, std::max<std::size_t>(1, spec.targets.size())));
  std::vector<EndpointReport> reports(spec.targets.size());
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < spec.targets.size(); i += threads) reports[i] = run_endpoint(spec, spec.targets[i]);
    });
  }
  for (auto& th : workers) th.join();
  std::sort(reports.begin(), reports.end(),
            [](const EndpointReport& a, const EndpointReport& b) { return a.endpoint < b.endpoint; });
  return reports;
}

Aggregate aggregate(const std::vector<EndpointReport>& reports) {
  Aggregate a;
  a.endpoints = reports.size();
  std::vector<double> totals;
  for (const auto& r : reports) {
    a.passed += r.pass ? 1 : 0;
    a.msgs_sent += r.msgs_sent;
    a.msgs_received += r.msgs_received;
    totals.push_back(r.total_ms);
  }
  if (totals.empty()) return a;
  std::sort(totals.begin(), totals.end());
  const std::size_t n = totals.size();
  a.median_total_ms = n % 2 ? totals[n / 2] : (totals[n / 2 - 1] + totals[n / 2]) / 2.0;
  a.mean_total_ms = std::accumulate(totals.begin(), totals.end(), 0.0) / static_cast<double>(n);
  a.max_total_ms = totals.back();
  return a;
}

void write_csv(const std::vector<EndpointReport>& reports, std::ostream& out) {
  out << "endpoint,verdict";
  for (std::size_t i = 1; i <= kSteps; ++i) out << ",step" << i << "_ms";
  out << ",msgs_sent,msgs_received,total_ms\n";
  for (const auto& r : reports) {
    out << r.endpoint << ',' << csv_field(r.verdict());
    for (const auto& s : r.step_ms) out << ',' << (s ? format_ms(*s) : "");
    out << ',' << r.msgs_sent << ',' << r.msgs_received << ',' << format_ms(r.total_ms) << '\n';
  }
  const Aggregate a = aggregate(reports);
  out << "aggregate," << (a.all_pass() ? "pass" : "fail");
  for (std::size_t i = 0; i < kSteps; ++i) out << ',';
  out << ',' << a.msgs_sent << ',' << a.msgs_received << ",median=" << format_ms(a.median_total_ms)
      << ";mean=" << format_ms(a.mean_total_ms) << ";max=" << format_ms(a.max_total_ms) << '\n';
}

void emit_csv(const std::vector<EndpointReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write CSV to '" + path.string() + "'");
  write_csv(reports, out);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// Conformance probe

bool ProbeReport::all_ok() const {
  return !cases.empty() && std::all_of(cases.begin(), cases.end(), [](const ProbeCase& c) { return c.ok(); });
}

namespace {

// Reads until the connection closes or the deadline passes. The marker
// request counts as accepted if its response shows up with success.
void observe(LdapClient& c, std::int64_t marker_id, std::int64_t offending_id, Clock::time_point deadline,
             ProbeCase& pc) {
  bool marker_answered = false;
  bool error_reply = false;
  bool closed = false;
  try {
    for (;;) {
      Message m = c.receive(deadline);
      if (m.correlation_id() == marker_id && ldap::result_code(m) == ldap::ResultCode::kSuccess)
        marker_answered = true;
      if (m.correlation_id() == offending_id && ldap::result_code(m) == ldap::ResultCode::kProtocolError)
        error_reply = true;
    }
  } catch (const ClientError& e) {
    closed = e.kind() == ClientError::Kind::Closed;
  }
  pc.rejected = !marker_answered && (closed || error_reply);
  pc.detail = std::string(closed ? "connection closed" : "connection left open") +
              (error_reply ? ", protocolError returned" : "") +
              (marker_answered ? ", follow-up request was served" : ", follow-up request not served");
}

}  // namespace

ProbeReport conformance_probe(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout,
                              const std::string& bind_dn, const std::string& bind_password) {
  ProbeReport report;
  auto deadline = [&] { return Clock::now() + timeout; };

  {
    ProbeCase pc{"control: bind then unbind", false, false, {}};
    try {
      auto c = LdapClient::connect(host, port, timeout);
      c.send(ldap::bind_request(1, bind_dn, bind_password));
      Message m = c.receive(deadline());
      const bool ok = m.shape() == ldap::shape::bind_res() && m.correlation_id() == 1 &&
                      ldap::result_code(m) == ldap::ResultCode::kSuccess;
      c.send(ldap::unbind_request(2));
      const bool closed = c.wait_for_close(deadline());
      pc.rejected = !ok;
      pc.detail = std::string(ok ? "bind succeeded" : "bind failed: " + result_text(m)) +
                  (closed ? ", closed after unbind" : ", not closed after unbind");
      if (!closed) pc.rejected = true;
    } catch (const std::exception& e) {
      pc.rejected = true;
      pc.detail = e.what();
    }
    report.cases.push_back(std::move(pc));
  }

  {
    ProbeCase pc{"client-sent SearchEntry after bind", true, false, {}};
    try {
      auto c = LdapClient::connect(host, port, timeout);
      c.send(ldap::bind_request(1, bind_dn, bind_password));
      c.receive(deadline());
      ber::Bytes script = ldap::encode(ldap::search_entry(2, "uid=probe,o=acme", {{"cn", {"probe"}}})).bytes;
      auto marker = ldap::encode(ldap::bind_request(3, bind_dn, bind_password)).bytes;
      script.insert(script.end(), marker.begin(), marker.end());
      c.send_raw(script, 2);
      observe(c, 3, 2, deadline(), pc);
    } catch (const std::exception& e) {
      pc.detail = std::string("probe could not run: ") + e.what();
    }
    report.cases.push_back(std::move(pc));
  }

  {
    ProbeCase pc{"request after UnbindRq", true, false, {}};
    try {
      auto c = LdapClient::connect(host, port, timeout);
      ber::Bytes script = ldap::encode(ldap::unbind_request(1)).bytes;
      auto marker = ldap::encode(ldap::bind_request(2, bind_dn, bind_password)).bytes;
      script.insert(script.end(), marker.begin(), marker.end());
      c.send_raw(script, 2);
      observe(c, 2, 2, deadline(), pc);
    } catch (const std::exception& e) {
      pc.detail = std::string("probe could not run: ") + e.what();
    }
    report.cases.push_back(std::move(pc));
  }
  return report;
}

void write_probe_report(const ProbeReport& r, std::ostream& out) {
  for (const auto& c : r.cases) {
    out << (c.ok() ? "ok   " : "FAIL ") << c.name << ": expected " << (c.expect_reject ? "reject" : "accept")
        << ", observed " << (c.rejected ? "reject" : "accept") << " (" << c.detail << ")\n";
  }
  out << (r.all_ok() ? "probe: server enforced its protocol\n" : "probe: findings above\n");
}

}  // namespace svcemu::loadgen
