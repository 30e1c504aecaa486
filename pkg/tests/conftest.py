from pathlib import Path

import pytest

from fragmentc.compose import FragmentLoader, compose_from_config
from fragmentc.engine import build_engine, parse
from fragmentc.grammar import parse_tool_config

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

# the MSC grammar in its minimal single-segment form (the corpus file adds more)
MSC_GRAMMAR_SOURCE = '''grammar MSC {

  interface Event;
  external Cond;
  external Method;

  MSC = "msc" name:IDENT "{" (Instance | Method)* "}";

  Instance = "instance" name:IDENT "{" Event* "}";

  SendEvent implements Event =
    "out" message:IDENT "to" receiver:IDENT ";";

  ReceiveEvent implements Event =
    "in" message:IDENT "from" sender:IDENT ";";

  Condition implements Event = "condition" name:IDENT
    (shared:["shared"]
    (sharedWithAll:["all"] | sharedWith:IDENT ("," sharedWith:IDENT)*)
    )?
    ( "{" Cond "}" | ";" );

  concept texteditor {
    keywords: msc, instance, in, out, to, from, condition, shared, all;
    foldable: MSC, Instance, Condition;
    segment: SendEvent ("pict/arrow.gif")
    show: "Send to " receiver ":" message;
    // further segments
  }
}
'''

MSC_KEYWORDS = {"msc", "instance", "in", "out", "to", "from", "condition", "shared", "all"}
JAVA_KEYWORDS = {"public", "boolean", "int", "void", "return", "true", "false"}

# a fully qualified tool config, package paths and all
QUALIFIED_TOOL_CONFIG = '''rootfactory MSCRootFactory for MSCRoot<MCCompilationUnit>{
  mc.examples.msc.msc.MSC.MCCompilationUnit mscdefinition <<start>>;
  mc.examples.msc.java.JavaDSL.Expression cond in mscdefinition.cond;
  mc.examples.msc.java.JavaDSL.MethodDeclaration method in
    mscdefinition.method;

  prettyprint {
    mc.examples.msc.msc.prettyprint.MSCConcretePrettyPrinter;
    mc.examples.msc.java.JavaDSLConcretePrettyPrinter;
  }
}
concept texteditor {
  tool: "mc.examples.msc.msc.MSCTool";
  workflows: symtab, check;
  menuitem Generate Trace
    ("mc.examples.msc.msc.action.GenerateTraceAction");
  navigatoritem Compose
    ("mc.examples.msc.msc.compose.ComposeAction");
}
'''


@pytest.fixture(scope="session")
def corpus() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def mail_text() -> str:
    return (CORPUS / "documents" / "mail.msc").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def msc_lang():
    config = CORPUS / "msc.mctool"
    cfg = parse_tool_config(config.read_text(encoding="utf-8"), str(config))
    loader = FragmentLoader([CORPUS], use_env=False)
    return compose_from_config(cfg, loader)


@pytest.fixture(scope="session")
def msc_handle(msc_lang):
    return build_engine(msc_lang)


@pytest.fixture(scope="session")
def mail_outcome(msc_lang, msc_handle, mail_text):
    return parse(mail_text, msc_lang, "mail.msc", handle=msc_handle)


@pytest.fixture(scope="session")
def vip_lang():
    config = CORPUS / "vipmsc.mctool"
    cfg = parse_tool_config(config.read_text(encoding="utf-8"), str(config))
    loader = FragmentLoader([CORPUS], use_env=False)
    return compose_from_config(cfg, loader)
