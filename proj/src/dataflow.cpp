// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include "scholex/dataflow.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "scholex/error.hpp"
#include "scholex/util.hpp"

namespace scholex::analysis {

using python::NodeKind;
using python::Position;
using python::Span;
using python::TreeNode;

namespace {

bool contains(const std::vector<std::string>& list, std::string_view item) {
  return std::find(list.begin(), list.end(), item) != list.end();
}

void add_unique(std::vector<std::string>& list, const std::string& item) {
  if (!contains(list, item)) list.push_back(item);
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key,
                                     std::vector<std::string> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) throw Error(ErrorCode::Config, std::string("registry key '") + key +
                                                        "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw Error(ErrorCode::Config, std::string("registry key '") + key +
                                         "' must be an array of strings");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

Registries Registries::defaults() {
  Registries r;
  r.sources = {"read_csv", "read_table", "read_excel", "load", "loadtxt", "open"};
  r.sinks = {"to_csv", "savetxt", "save", "write", "savefig"};
  return r;
}

Registries Registries::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "registry file must hold a JSON object");
  Registries d = defaults();
  Registries r;
  r.sources = string_list(j, "sources", d.sources);
  r.sinks = string_list(j, "sinks", d.sinks);
  r.ignored = string_list(j, "ignored", d.ignored);
  return r;
}

Registries Registries::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Config, "cannot read registry " + path.string() + ": " + e.what());
  }
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Config, "registry " + path.string() + " is not JSON");
  return from_json(j);
}

nlohmann::json Registries::to_json() const {
  return {{"sources", sources}, {"sinks", sinks}, {"ignored", ignored}};
}

bool Registries::is_source(std::string_view tail) const { return contains(sources, tail); }
bool Registries::is_sink(std::string_view tail) const { return contains(sinks, tail); }
bool Registries::is_ignored(std::string_view tail) const { return contains(ignored, tail); }

const char* to_string(Direction d) { return d == Direction::Input ? "input" : "output"; }

const char* to_string(TermRole role) {
  switch (role) {
    case TermRole::Dataset: return "dataset";
    case TermRole::Source: return "source";
    case TermRole::Operation: return "operation";
    case TermRole::Sink: return "sink";
  }
  return "operation";
}

std::string dataset_label(std::string_view literal) {
  if (literal == kDynamicLabel) return std::string(literal);
  std::string_view s = literal;
  while (!s.empty() && (s.back() == '/' || s.back() == '\\')) s.remove_suffix(1);
  auto slash = s.find_last_of("/\\");
  if (slash != std::string_view::npos) s.remove_prefix(slash + 1);
  auto dot = s.rfind('.');
  if (dot != std::string_view::npos && dot > 0) s = s.substr(0, dot);
  return std::string(s);
}

namespace {

struct Event {
  std::string callee;
  std::set<std::string> inputs;
};

// Abstract value of an expression: which tainted variables feed it and
// which operations were applied on the way.
struct Value {
  std::vector<std::string> vars;
  std::vector<Event> events;
  std::optional<std::size_t> source_input;
  const TreeNode* call = nullptr;  // untainted call producing the value
  std::optional<std::string> literal;
  std::optional<std::string> write_literal;

  void absorb(Value&& o) {
    for (auto& v : o.vars) add_unique(vars, v);
    for (auto& e : o.events) events.push_back(std::move(e));
  }
};

struct State {
  std::set<std::string> tainted;
  std::set<std::string> dirty;    // module aliases used for side effects on tainted data
  std::set<std::string> aliases;  // names bound by import statements
  std::map<std::string, const TreeNode*> bindings;
  std::map<std::string, std::string> strings;
  std::map<std::string, std::string> write_handles;
};

State merge(const State& a, const State& b) {
  State m = a;
  m.tainted.insert(b.tainted.begin(), b.tainted.end());
  m.dirty.insert(b.dirty.begin(), b.dirty.end());
  m.aliases.insert(b.aliases.begin(), b.aliases.end());
  for (const auto& [k, v] : b.bindings) m.bindings.emplace(k, v);
  for (auto it = m.strings.begin(); it != m.strings.end();) {
    auto other = b.strings.find(it->first);
    if (other == b.strings.end() || other->second != it->second) {
      it = m.strings.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& [k, v] : b.write_handles) m.write_handles.emplace(k, v);
  return m;
}

std::string render(const TreeNode& n) {
  switch (n.kind) {
    case NodeKind::Name:
      return n.text.value_or("");
    case NodeKind::Attribute:
      if (n.children.size() == 2) return render(n.children[0]) + "." + n.children[1].text.value_or("");
      return n.text.value_or("");
    case NodeKind::Call:
      return render(n.children.front()) + "()";
    case NodeKind::Constant:
      return n.string_literal ? "'" + n.text.value_or("") + "'" : n.text.value_or("");
    default:
      break;
  }
  if (n.is("Subscript")) return render(n.children.front()) + "[]";
  return "<expr>";
}

// The Name at the bottom of an attribute/subscript chain.
const TreeNode* root_name(const TreeNode& n) {
  const TreeNode* cur = &n;
  while (cur->kind == NodeKind::Attribute || cur->is("Subscript")) {
    if (cur->children.empty()) return nullptr;
    cur = &cur->children.front();
  }
  return cur->kind == NodeKind::Name ? cur : nullptr;
}

const TreeNode* bottom_call(const TreeNode& n) {
  const TreeNode* cur = &n;
  while ((cur->kind == NodeKind::Attribute || cur->is("Subscript")) && !cur->children.empty()) {
    cur = &cur->children.front();
  }
  return cur->kind == NodeKind::Call ? cur : nullptr;
}

bool is_expression_node(const TreeNode& n) {
  return !(n.is("Operator") || n.is("identifier") || n.is("conversion"));
}

const std::vector<std::string_view> kPathKeywords = {"filepath_or_buffer", "path_or_buf", "fname",
                                                     "file", "filename", "path", "io", "f"};

struct FunctionInfo {
  const TreeNode* node = nullptr;
  std::vector<std::string> return_vars;
  bool analyzing = false;
};

class Analyzer {
 public:
  explicit Analyzer(const Registries& registries) : reg_(registries) {}

  DataflowRecord run(const python::ScriptTree& tree) {
    for (const auto& s : tree.root.children) exec(s);
    DataflowRecord rec;
    rec.script = tree.source_path;
    rec.inputs = inputs_;
    rec.outputs = outputs_;
    rec.operations = ops_;
    std::stable_sort(rec.operations.begin(), rec.operations.end(),
                     [](const OperationRef& a, const OperationRef& b) {
                       return a.span.begin < b.span.begin;
                     });
    rec.flows.assign(flows_.begin(), flows_.end());
    return rec;
  }

 private:
  // ---- records ---------------------------------------------------------
  void add_flow(const std::string& from, const std::string& via, const std::string& to) {
    if (from == to) return;
    flows_.insert({from, via, to});
  }

  void add_flows(const Value& v, const std::string& target) {
    for (const auto& u : v.vars) {
      bool consumed = false;
      for (const auto& ev : v.events) {
        if (ev.inputs.count(u)) {
          add_flow(u, ev.callee, target);
          consumed = true;
        }
      }
      if (!consumed) add_flow(u, "=", target);
    }
  }

  void record_op(const std::string& callee, std::optional<std::string> receiver,
                 const std::vector<std::string>& tainted_args, Span span) {
    for (auto& op : ops_) {
      if (op.span == span && op.callee == callee) {
        for (const auto& a : tainted_args) add_unique(op.tainted_args, a);
        return;
      }
    }
    ops_.push_back({callee, std::move(receiver), tainted_args, span});
  }

  // An untainted call whose result is later driven by tainted data, such
  // as a model constructor followed by `model.fit(data)`.
  void record_binding_call(const TreeNode& call) {
    const TreeNode& func = call.children.front();
    std::optional<std::string> receiver;
    if (func.kind == NodeKind::Attribute && func.children.front().kind == NodeKind::Name &&
        !st_.aliases.count(*func.children.front().text)) {
      receiver = *func.children.front().text;
    }
    record_op(render(func), receiver, {}, call.span);
  }

  std::size_t record_dataset(std::vector<DatasetRef>& list, DatasetRef ref) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].span == ref.span) return i;
    }
    list.push_back(std::move(ref));
    return list.size() - 1;
  }

  // ---- expressions -----------------------------------------------------
  std::optional<std::string> string_of(const TreeNode& n) const {
    if (n.kind == NodeKind::Constant && n.string_literal) return n.text;
    if (n.kind == NodeKind::Name) {
      auto it = st_.strings.find(*n.text);
      if (it != st_.strings.end()) return it->second;
    }
    return std::nullopt;
  }

  Value eval(const TreeNode& n, bool statement_level = false) {
    Value v;
    switch (n.kind) {
      case NodeKind::Name: {
        const std::string& name = *n.text;
        if (st_.tainted.count(name)) v.vars.push_back(name);
        if (auto it = st_.strings.find(name); it != st_.strings.end()) v.literal = it->second;
        if (auto it = st_.write_handles.find(name); it != st_.write_handles.end()) {
          v.write_literal = it->second;
        }
        return v;
      }
      case NodeKind::Constant:
        if (n.string_literal) v.literal = n.text;
        return v;
      case NodeKind::Call:
        return eval_call(n, statement_level);
      case NodeKind::Attribute:
        if (n.children.size() == 2) return eval(n.children[0]);
        return v;
      default:
        break;
    }
    if (n.is("Lambda")) return v;
    if (n.is("NamedExpr")) {
      Value value = eval(n.children[1]);
      assign(n.children[0], value);
      return value;
    }
    if (n.is("ListComp") || n.is("SetComp") || n.is("GeneratorExp") || n.is("DictComp")) {
      return eval_comprehension(n);
    }
    for (const auto& c : n.children) {
      if (is_expression_node(c)) v.absorb(eval(c));
    }
    return v;
  }

  Value eval_comprehension(const TreeNode& n) {
    State saved = st_;
    std::vector<const TreeNode*> elements;
    for (const auto& c : n.children) {
      if (!c.is("comprehension")) {
        elements.push_back(&c);
        continue;
      }
      Value iter = eval(c.children[1]);
      iter.source_input.reset();
      assign(c.children[0], iter);
      for (std::size_t k = 2; k < c.children.size(); ++k) eval(c.children[k]);
    }
    Value result;
    for (const TreeNode* e : elements) result.absorb(eval(*e));
    st_ = saved;
    return result;
  }

  Value eval_call(const TreeNode& call, bool statement_level) {
    const TreeNode& func = call.children.front();
    std::string callee = render(func);
    std::string tail;
    if (func.kind == NodeKind::Name) tail = *func.text;
    if (func.kind == NodeKind::Attribute && func.children.size() == 2) tail = *func.children[1].text;
    const TreeNode* receiver = func.kind == NodeKind::Attribute ? &func.children.front() : nullptr;

    Value recv;
    if (receiver) {
      recv = eval(*receiver);
    } else if (func.kind != NodeKind::Name) {
      recv = eval(func);
    }
    std::vector<const TreeNode*> positional;
    std::map<std::string, const TreeNode*> keywords;
    std::vector<Value> positional_values;
    Value args;
    for (std::size_t k = 1; k < call.children.size(); ++k) {
      const TreeNode& a = call.children[k];
      if (a.is("keyword")) {
        keywords[*a.children[0].text] = &a.children[1];
        args.absorb(eval(a.children[1]));
      } else if (a.is("Starred") || a.is("kwargs")) {
        args.absorb(eval(a));
      } else {
        positional.push_back(&a);
        positional_values.push_back(eval(a));
        Value copy = positional_values.back();
        args.absorb(std::move(copy));
      }
    }

    const TreeNode* first_arg = positional.empty() ? nullptr : positional.front();
    if (!first_arg) {
      for (auto key : kPathKeywords) {
        if (auto it = keywords.find(std::string(key)); it != keywords.end()) {
          first_arg = it->second;
          break;
        }
      }
    }
    bool first_arg_tainted =
        !positional_values.empty() ? !positional_values.front().vars.empty()
                                   : (first_arg && !eval_quiet(*first_arg).vars.empty());

    if (reg_.is_source(tail) && recv.vars.empty() && !first_arg_tainted) {
      std::optional<std::string> literal = first_arg ? string_of(*first_arg) : std::nullopt;
      std::string lit = literal.value_or(std::string(kDynamicLabel));
      if (tail == "open") {
        const TreeNode* mode = positional.size() > 1 ? positional[1] : nullptr;
        if (auto it = keywords.find("mode"); it != keywords.end()) mode = it->second;
        std::string m = mode ? string_of(*mode).value_or("r") : "r";
        if (m.find_first_of("wax") != std::string::npos) {
          Value handle;
          handle.write_literal = lit;
          return handle;
        }
      }
      DatasetRef ref{dataset_label(lit), lit, lit, Direction::Input, call.span, tail};
      std::size_t idx = record_dataset(inputs_, std::move(ref));
      Value v;
      v.vars.push_back(inputs_[idx].literal);
      v.source_input = idx;
      return v;
    }

    if (reg_.is_sink(tail)) {
      const TreeNode* recv_name =
          receiver && receiver->kind == NodeKind::Name ? receiver : nullptr;
      std::vector<std::string> tainted = recv.vars;
      if (recv_name && st_.dirty.count(*recv_name->text)) add_unique(tainted, *recv_name->text);
      for (const auto& a : args.vars) add_unique(tainted, a);
      if (!tainted.empty()) {
        std::optional<std::string> filename;
        for (const TreeNode* p : positional) {
          if (auto s = string_of(*p)) {
            filename = s;
            break;
          }
          if (p->kind == NodeKind::Name) {
            auto it = st_.write_handles.find(*p->text);
            if (it != st_.write_handles.end()) {
              filename = it->second;
              break;
            }
          }
        }
        if (!filename && recv_name) {
          auto it = st_.write_handles.find(*recv_name->text);
          if (it != st_.write_handles.end()) filename = it->second;
        }
        if (!filename) {
          for (auto key : kPathKeywords) {
            if (auto it = keywords.find(std::string(key)); it != keywords.end()) {
              filename = string_of(*it->second);
              if (filename) break;
            }
          }
        }
        std::string lit = filename.value_or(std::string(kDynamicLabel));
        std::string variable;
        if (recv_name && std::find(tainted.begin(), tainted.end(), *recv_name->text) != tainted.end()) {
          variable = *recv_name->text;
        } else {
          variable = tainted.front();
        }
        record_dataset(outputs_, {dataset_label(lit), lit, variable, Direction::Output, call.span, tail});
      }
      return {};
    }

    Value result;
    result.absorb(std::move(recv));
    std::vector<std::string> tainted_args = args.vars;
    result.absorb(std::move(args));

    if (reg_.is_ignored(tail)) return result;

    if (func.kind == NodeKind::Name) {
      if (auto it = functions_.find(*func.text); it != functions_.end()) {
        for (const auto& r : it->second.return_vars) add_unique(result.vars, r);
        if (!tainted_args.empty()) {
          for (const auto& r : analyze_call(it->second, positional_values, keywords)) {
            add_unique(result.vars, r);
          }
        }
      }
    }

    if (result.vars.empty()) {
      result.call = &call;
      return result;
    }

    std::optional<std::string> receiver_var;
    if (receiver && receiver->kind == NodeKind::Name && !st_.aliases.count(*receiver->text)) {
      receiver_var = *receiver->text;
    }
    record_op(callee, receiver_var, tainted_args, call.span);
    result.events.push_back({callee, std::set<std::string>(result.vars.begin(), result.vars.end())});

    if (receiver && !tainted_args.empty()) {
      if (const TreeNode* inner = bottom_call(*receiver); inner && eval_quiet(*inner).vars.empty()) {
        record_binding_call(*inner);
      }
      if (const TreeNode* root = root_name(*receiver)) {
        const std::string& r = *root->text;
        if (st_.aliases.count(r)) {
          if (statement_level) {
            st_.dirty.insert(r);
            for (const auto& u : tainted_args) add_flow(u, callee, r);
          }
        } else {
          if (root == receiver) {
            if (auto b = st_.bindings.find(r); b != st_.bindings.end()) {
              record_binding_call(*b->second);
            }
          }
          st_.tainted.insert(r);
          for (const auto& u : tainted_args) add_flow(u, callee, r);
        }
      }
    }
    return result;
  }

  // Evaluates without recording anything; used for side questions.
  Value eval_quiet(const TreeNode& n) {
    auto saved_inputs = inputs_;
    auto saved_outputs = outputs_;
    auto saved_ops = ops_;
    auto saved_flows = flows_;
    State saved = st_;
    Value v = eval(n);
    inputs_ = std::move(saved_inputs);
    outputs_ = std::move(saved_outputs);
    ops_ = std::move(saved_ops);
    flows_ = std::move(saved_flows);
    st_ = std::move(saved);
    return v;
  }

  std::vector<std::string> analyze_call(FunctionInfo& fn, const std::vector<Value>& positional,
                                        const std::map<std::string, const TreeNode*>& keywords) {
    if (fn.analyzing || call_depth_ > 0) return {};
    std::vector<std::string> params;
    if (const TreeNode* arguments = fn.node->child("arguments")) {
      for (const auto& p : arguments->children) {
        if (p.is("arg")) params.push_back(*p.children.front().text);
      }
    }
    State saved = st_;
    for (const auto& p : params) forget(p);
    for (std::size_t k = 0; k < params.size() && k < positional.size(); ++k) {
      Value v = positional[k];
      v.source_input.reset();
      assign_name(params[k], v);
    }
    for (const auto& [name, node] : keywords) {
      if (contains(params, name)) {
        Value v = eval(*node);
        v.source_input.reset();
        assign_name(name, v);
      }
    }
    fn.analyzing = true;
    ++call_depth_;
    auto returns = run_body(*fn.node);
    --call_depth_;
    fn.analyzing = false;
    st_ = std::move(saved);
    return returns;
  }

  // ---- assignment ------------------------------------------------------
  void forget(const std::string& name) {
    st_.tainted.erase(name);
    st_.dirty.erase(name);
    st_.aliases.erase(name);
    st_.bindings.erase(name);
    st_.strings.erase(name);
    st_.write_handles.erase(name);
  }

  void assign_name(const std::string& t, const Value& v) {
    if (v.source_input && v.events.empty() && v.vars.size() == 1) {
      inputs_[*v.source_input].variable = t;
      forget(t);
      st_.tainted.insert(t);
      return;
    }
    add_flows(v, t);
    forget(t);
    if (!v.vars.empty()) st_.tainted.insert(t);
    if (v.call && v.vars.empty()) st_.bindings[t] = v.call;
    if (v.literal) st_.strings[t] = *v.literal;
    if (v.write_literal) st_.write_handles[t] = *v.write_literal;
  }

  void assign(const TreeNode& target, const Value& v) {
    if (target.kind == NodeKind::Name) {
      assign_name(*target.text, v);
      return;
    }
    Value shared = v;
    shared.source_input.reset();
    shared.call = nullptr;
    shared.literal.reset();
    shared.write_literal.reset();
    if (target.is("Tuple") || target.is("List")) {
      for (const auto& c : target.children) assign(c, shared);
      return;
    }
    if (target.is("Starred")) {
      assign(target.children.front(), shared);
      return;
    }
    if (target.kind == NodeKind::Attribute || target.is("Subscript")) {
      if (target.is("Subscript")) eval(target.children[1]);
      const TreeNode* root = root_name(target);
      if (root && !shared.vars.empty() && !st_.aliases.count(*root->text)) {
        add_flows(shared, *root->text);
        st_.tainted.insert(*root->text);
      }
    }
  }

  // ---- statements ------------------------------------------------------
  void exec_block(const TreeNode& body) {
    for (const auto& s : body.children) exec(s);
  }

  std::vector<std::string> run_body(const TreeNode& fn) {
    std::vector<std::string> returns;
    auto* saved = returns_;
    returns_ = &returns;
    if (const TreeNode* body = fn.child("body")) exec_block(*body);
    returns_ = saved;
    return returns;
  }

  void define_function(const TreeNode& s) {
    const TreeNode* name = nullptr;
    for (const auto& c : s.children) {
      if (c.is("identifier")) {
        name = &c;
        break;
      }
    }
    State saved = st_;
    if (const TreeNode* arguments = s.child("arguments")) {
      for (const auto& p : arguments->children) {
        if (!p.children.empty() && p.children.front().is("identifier")) forget(*p.children.front().text);
      }
    }
    FunctionInfo info;
    info.node = &s;
    info.return_vars = run_body(s);
    st_ = std::move(saved);
    if (name && class_depth_ == 0) {
      forget(*name->text);
      functions_[*name->text] = std::move(info);
    }
  }

  void exec(const TreeNode& s) {
    switch (s.kind) {
      case NodeKind::Assign: {
        Value v = eval(s.children.back());
        for (std::size_t k = 0; k + 1 < s.children.size(); ++k) assign(s.children[k], v);
        return;
      }
      case NodeKind::Expr:
        eval(s.children.front(), true);
        return;
      case NodeKind::Import:
      case NodeKind::ImportFrom:
        for (const auto& a : s.children) {
          if (!a.is("alias")) continue;
          const TreeNode* as = a.child("asname");
          std::string name = as ? *as->text : *a.children.front().text;
          if (name == "*") continue;
          if (!as) name = name.substr(0, name.find('.'));
          forget(name);
          st_.aliases.insert(name);
        }
        return;
      case NodeKind::FunctionDef:
        define_function(s);
        return;
      default:
        break;
    }
    const std::string& k = s.other_kind;
    if (k == "AsyncFunctionDef") {
      define_function(s);
    } else if (k == "ClassDef") {
      State saved = st_;
      ++class_depth_;
      if (const TreeNode* body = s.child("body")) exec_block(*body);
      --class_depth_;
      st_ = std::move(saved);
      if (const TreeNode* name = s.child("identifier")) forget(*name->text);
    } else if (k == "If") {
      eval(s.children[0]);
      State pre = st_;
      exec_block(s.children[1]);
      State after_body = std::move(st_);
      st_ = std::move(pre);
      if (const TreeNode* orelse = s.child("orelse")) exec_block(*orelse);
      st_ = merge(after_body, st_);
    } else if (k == "For" || k == "AsyncFor") {
      Value iter = eval(s.children[1]);
      iter.source_input.reset();
      State pre = st_;
      for (int pass = 0; pass < 2; ++pass) {
        assign(s.children[0], iter);
        exec_block(s.children[2]);
      }
      st_ = merge(pre, st_);
      if (const TreeNode* orelse = s.child("orelse")) exec_block(*orelse);
    } else if (k == "While") {
      State pre = st_;
      for (int pass = 0; pass < 2; ++pass) {
        eval(s.children[0]);
        exec_block(s.children[1]);
      }
      st_ = merge(pre, st_);
      if (const TreeNode* orelse = s.child("orelse")) exec_block(*orelse);
    } else if (k == "With" || k == "AsyncWith") {
      for (const auto& item : s.children) {
        if (!item.is("withitem")) continue;
        Value v = eval(item.children.front());
        if (const TreeNode* as = item.child("as")) assign(as->children.front(), v);
      }
      exec_block(s.children.back());
    } else if (k == "Try") {
      exec_block(s.children.front());
      State after_body = st_;
      State acc = after_body;
      for (const auto& c : s.children) {
        if (c.is("ExceptHandler")) {
          st_ = after_body;
          for (const auto& h : c.children) {
            if (h.is("body")) {
              exec_block(h);
            } else if (!h.is("identifier")) {
              eval(h);
            } else {
              forget(*h.text);
            }
          }
          acc = merge(acc, st_);
        } else if (c.is("orelse")) {
          st_ = after_body;
          exec_block(c);
          acc = merge(acc, st_);
        }
      }
      st_ = std::move(acc);
      if (const TreeNode* fin = s.child("finalbody")) exec_block(*fin);
    } else if (k == "Match") {
      eval(s.children.front());
      State pre = st_;
      State acc = pre;
      for (const auto& c : s.children) {
        if (!c.is("match_case")) continue;
        st_ = pre;
        if (const TreeNode* guard = c.child("guard")) eval(guard->children.front());
        exec_block(*c.child("body"));
        acc = merge(acc, st_);
      }
      st_ = std::move(acc);
    } else if (k == "Return") {
      if (s.children.empty()) return;
      Value v = eval(s.children.front());
      if (returns_) {
        for (const auto& r : v.vars) add_unique(*returns_, r);
      }
    } else if (k == "Delete") {
      for (const auto& t : s.children) {
        if (t.kind == NodeKind::Name) forget(*t.text);
      }
    } else if (k == "AugAssign") {
      Value v = eval(s.children[2]);
      const TreeNode& target = s.children[0];
      const TreeNode* root = target.kind == NodeKind::Name ? &target : root_name(target);
      if (root && !v.vars.empty() && !st_.aliases.count(*root->text)) {
        add_flows(v, *root->text);
        st_.tainted.insert(*root->text);
        st_.strings.erase(*root->text);
      }
    } else if (k == "AnnAssign") {
      if (s.children.size() == 3) assign(s.children[0], eval(s.children[2]));
    } else if (k == "Raise" || k == "Assert") {
      for (const auto& c : s.children) eval(c);
    }
  }

  const Registries& reg_;
  State st_;
  std::map<std::string, FunctionInfo> functions_;
  std::vector<DatasetRef> inputs_;
  std::vector<DatasetRef> outputs_;
  std::vector<OperationRef> ops_;
  std::set<Flow> flows_;
  std::vector<std::string>* returns_ = nullptr;
  int call_depth_ = 0;
  int class_depth_ = 0;
};

nlohmann::json span_json(const Span& s) {
  return {s.begin.line, s.begin.column, s.end.line, s.end.column};
}

Span span_from(const nlohmann::json& j) {
  return {{j.at(0).get<int>(), j.at(1).get<int>()}, {j.at(2).get<int>(), j.at(3).get<int>()}};
}

nlohmann::json dataset_json(const DatasetRef& d) {
  return {{"label", d.label}, {"literal", d.literal}, {"variable", d.variable},
          {"direction", to_string(d.direction)}, {"span", span_json(d.span)}, {"via", d.via}};
}

DatasetRef dataset_from(const nlohmann::json& j) {
  DatasetRef d;
  d.label = j.at("label").get<std::string>();
  d.literal = j.at("literal").get<std::string>();
  d.variable = j.at("variable").get<std::string>();
  d.direction = j.at("direction").get<std::string>() == "output" ? Direction::Output : Direction::Input;
  d.span = span_from(j.at("span"));
  d.via = j.value("via", "");
  return d;
}

TermRole role_from(std::string_view s) {
  if (s == "dataset") return TermRole::Dataset;
  if (s == "source") return TermRole::Source;
  if (s == "sink") return TermRole::Sink;
  return TermRole::Operation;
}

void add_term(std::vector<Term>& terms, const std::string& text, TermRole role) {
  if (text.empty()) return;
  for (const auto& t : terms) {
    if (t.text == text) return;
  }
  terms.push_back({text, role});
}

}  // namespace

DataflowRecord extract_dataflow(const python::ScriptTree& tree, const Registries& registries) {
  Analyzer analyzer(registries);
  return analyzer.run(tree);
}

std::vector<Term> extract_terms(const DataflowRecord& record) {
  std::vector<Term> terms;
  for (const auto& in : record.inputs) {
    if (in.literal != kDynamicLabel) add_term(terms, in.label, TermRole::Dataset);
  }
  for (const auto& in : record.inputs) add_term(terms, in.via, TermRole::Source);
  for (const auto& op : record.operations) add_term(terms, op.callee, TermRole::Operation);
  for (const auto& out : record.outputs) add_term(terms, out.via, TermRole::Sink);
  return terms;
}

std::vector<Term> merge_terms(const std::vector<DataflowRecord>& records) {
  std::vector<Term> terms;
  for (const auto& r : records) {
    for (const auto& t : extract_terms(r)) add_term(terms, t.text, t.role);
  }
  return terms;
}

nlohmann::json to_json(const DataflowRecord& r) {
  nlohmann::json j{{"script", r.script}};
  j["inputs"] = nlohmann::json::array();
  for (const auto& d : r.inputs) j["inputs"].push_back(dataset_json(d));
  j["operations"] = nlohmann::json::array();
  for (const auto& op : r.operations) {
    nlohmann::json o{{"callee", op.callee},
                     {"receiver", op.receiver ? nlohmann::json(*op.receiver) : nlohmann::json()},
                     {"tainted_args", op.tainted_args},
                     {"span", span_json(op.span)}};
    j["operations"].push_back(std::move(o));
  }
  j["outputs"] = nlohmann::json::array();
  for (const auto& d : r.outputs) j["outputs"].push_back(dataset_json(d));
  j["flows"] = nlohmann::json::array();
  for (const auto& f : r.flows) j["flows"].push_back({f.from, f.via, f.to});
  return j;
}

DataflowRecord record_from_json(const nlohmann::json& j) {
  DataflowRecord r;
  r.script = j.at("script").get<std::string>();
  for (const auto& d : j.at("inputs")) r.inputs.push_back(dataset_from(d));
  for (const auto& o : j.at("operations")) {
    OperationRef op;
    op.callee = o.at("callee").get<std::string>();
    if (!o.at("receiver").is_null()) op.receiver = o.at("receiver").get<std::string>();
    op.tainted_args = o.at("tainted_args").get<std::vector<std::string>>();
    op.span = span_from(o.at("span"));
    r.operations.push_back(std::move(op));
  }
  for (const auto& d : j.at("outputs")) r.outputs.push_back(dataset_from(d));
  for (const auto& f : j.at("flows")) {
    r.flows.push_back({f.at(0).get<std::string>(), f.at(1).get<std::string>(), f.at(2).get<std::string>()});
  }
  return r;
}

nlohmann::json to_json(const std::vector<Term>& terms) {
  auto j = nlohmann::json::array();
  for (const auto& t : terms) j.push_back({{"text", t.text}, {"role", to_string(t.role)}});
  return j;
}

std::vector<Term> terms_from_json(const nlohmann::json& j) {
  std::vector<Term> terms;
  for (const auto& t : j) terms.push_back({t.at("text").get<std::string>(), role_from(t.at("role").get<std::string>())});
  return terms;
}

std::vector<std::filesystem::path> discover_scripts(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return out;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
  for (; it != end; it.increment(ec)) {
    if (ec) break;
    const auto& entry = *it;
    std::string name = entry.path().filename().string();
    if (entry.is_symlink(ec)) {
      if (entry.is_directory(ec)) it.disable_recursion_pending();
      continue;
    }
    if (entry.is_directory(ec)) {
      if (!name.empty() && name[0] == '.') it.disable_recursion_pending();
      continue;
    }
    if (entry.is_regular_file(ec) && entry.path().extension() == ".py") {
      out.push_back(fs::relative(entry.path(), root, ec));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json PackageAnalysis::to_json() const {
  nlohmann::json j{{"scripts_discovered", scripts_discovered},
                   {"scripts_analyzed", scripts_analyzed},
                   {"lossy_decoded", lossy_decoded}};
  j["records"] = nlohmann::json::array();
  for (const auto& r : records) j["records"].push_back(analysis::to_json(r));
  j["failures"] = nlohmann::json::array();
  for (const auto& f : failures) {
    j["failures"].push_back(
        {{"path", f.source_path}, {"line", f.line}, {"column", f.column}, {"message", f.message}});
  }
  j["terms"] = analysis::to_json(terms);
  return j;
}

PackageAnalysis PackageAnalysis::from_json(const nlohmann::json& j) {
  PackageAnalysis a;
  a.scripts_discovered = j.at("scripts_discovered").get<std::size_t>();
  a.scripts_analyzed = j.at("scripts_analyzed").get<std::size_t>();
  a.lossy_decoded = j.value("lossy_decoded", std::size_t{0});
  for (const auto& r : j.at("records")) a.records.push_back(record_from_json(r));
  for (const auto& f : j.at("failures")) {
    a.failures.push_back({f.at("path").get<std::string>(), f.at("line").get<int>(),
                          f.at("column").get<int>(), f.at("message").get<std::string>()});
  }
  a.terms = terms_from_json(j.at("terms"));
  return a;
}

PackageAnalysis analyze_package(const std::filesystem::path& root, const Registries& registries) {
  PackageAnalysis out;
  auto scripts = discover_scripts(root);
  out.scripts_discovered = scripts.size();
  for (const auto& rel : scripts) {
    std::string source;
    try {
      source = read_file(root / rel);
    } catch (const std::exception& e) {
      out.failures.push_back({rel.generic_string(), 0, 0, e.what()});
      continue;
    }
    auto parsed = python::parse_script(source, rel.generic_string());
    if (auto* failure = std::get_if<python::ParseFailure>(&parsed)) {
      spdlog::debug("parse failure in {}:{}: {}", failure->source_path, failure->line, failure->message);
      out.failures.push_back(std::move(*failure));
      continue;
    }
    auto& tree = std::get<python::ScriptTree>(parsed);
    if (tree.lossy_decoded) ++out.lossy_decoded;
    ++out.scripts_analyzed;
    out.records.push_back(extract_dataflow(tree, registries));
  }
  out.terms = merge_terms(out.records);
  return out;
}

}  // namespace scholex::analysis
