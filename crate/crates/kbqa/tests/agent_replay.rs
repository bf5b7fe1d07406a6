//! Full-run replay against golden fixtures: a 13-action exploration of the
//! Euler academic-genealogy question, ending in stop() with the recursive
//! advisor/student query as the final answer.
//!
//! The fixture set under `tests/fixtures/euler/` holds the canned knowledge
//! base (`kb.json`), the recorded policy/prune transcript with prompt
//! digests (`transcript.jsonl`), the expected final query (`final.sparql`),
//! and the golden run outcome (`trace.json`). Replaying must reproduce the
//! trace byte-for-byte; the digest checks inside the replay provider prove
//! every prompt is re-rendered byte-identically.
//!
//! Regenerate after deliberate renderer/prompt changes with:
//! `cargo test -p kbqa --test agent_replay -- --ignored regenerate`

mod common;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use kbqa::agent::{run_agent, Action, AgentConfig, AgentOutcome, StopReason};
use kbqa::ids::{EntityId, PropertyId};
use kbqa::kb::{
    BindingType, Claim, ClaimValue, EntityEntry, MemoryKb, PropertyExample, Qualifier, SearchHit,
    SearchResult, SparqlCell, SparqlResponse, SparqlTable, ValueNode,
};
use kbqa::llm::{LlmGateway, RecordingProvider, ReplayProvider};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/euler")
}

const QUESTION: &str = "Who are the doctoral advisors of Leonhard Euler, and their advisors, and so on? In addition, who are his doctoral student, grand-student, great-grand-student, and great-great-grand-students? Each tuple in the result should contain both the student and the doctoral advisor.";

const FINAL_SPARQL: &str = "SELECT ?doctor ?doctorMaster WHERE {
  { ?root (wdt:P184*) ?doctor. }
  UNION
  { ?root (wdt:P185/(wdt:P185?)/(wdt:P185?)/(wdt:P185?)) ?doctor. }
  ?doctor wdt:P184 ?doctorMaster.
  VALUES ?root {
    wd:Q7604
  }
}";

fn qid(s: &str) -> EntityId {
    EntityId::new(s).unwrap()
}

fn pid(s: &str) -> PropertyId {
    PropertyId::new(s).unwrap()
}

fn uri_cell(id: &str) -> Option<SparqlCell> {
    Some(SparqlCell {
        binding_type: BindingType::Uri,
        value: format!("http://www.wikidata.org/entity/{id}"),
        datatype: None,
    })
}

fn table(columns: &[&str], rows: Vec<Vec<Option<SparqlCell>>>) -> SparqlResponse {
    SparqlResponse::Table(SparqlTable {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    })
}

/// The slice of Wikidata the scripted run touches.
fn canned_kb() -> MemoryKb {
    let mut kb = MemoryKb::default();

    kb.searches.insert(
        "doctoral advisor".into(),
        SearchResult {
            entities: vec![],
            properties: vec![
                SearchHit {
                    id: pid("P184"),
                    label: "doctoral advisor".into(),
                    description: "person who supervised the doctorate of this person".into(),
                },
                SearchHit {
                    id: pid("P185"),
                    label: "doctoral student".into(),
                    description: "doctoral student(s) of a professor".into(),
                },
            ],
        },
    );
    kb.searches.insert(
        "Leonhard Euler".into(),
        SearchResult {
            entities: vec![SearchHit {
                id: qid("Q7604"),
                label: "Leonhard Euler".into(),
                description: "Swiss mathematician (1707-1783)".into(),
            }],
            properties: vec![],
        },
    );

    kb.entries.insert(
        "Q7604".into(),
        EntityEntry {
            subject: qid("Q7604"),
            label: Some("Leonhard Euler".into()),
            description: Some("Swiss mathematician (1707-1783)".into()),
            claims: vec![
                Claim {
                    property: pid("P31"),
                    label: Some("instance of".into()),
                    values: vec![ClaimValue {
                        value: ValueNode::Entity { id: qid("Q5"), label: Some("human".into()) },
                        qualifiers: vec![],
                    }],
                },
                Claim {
                    property: pid("P184"),
                    label: Some("doctoral advisor".into()),
                    values: vec![ClaimValue {
                        value: ValueNode::Entity {
                            id: qid("Q57246"),
                            label: Some("Johann Bernoulli".into()),
                        },
                        qualifiers: vec![],
                    }],
                },
                Claim {
                    property: pid("P569"),
                    label: Some("date of birth".into()),
                    values: vec![ClaimValue {
                        value: ValueNode::Time { value: "1707-04-15".into() },
                        qualifiers: vec![Qualifier {
                            property: pid("P17"),
                            label: Some("country".into()),
                            value: ValueNode::Entity {
                                id: qid("Q39"),
                                label: Some("Switzerland".into()),
                            },
                        }],
                    }],
                },
            ],
        },
    );
    kb.entries.insert(
        "Q57246".into(),
        EntityEntry {
            subject: qid("Q57246"),
            label: Some("Johann Bernoulli".into()),
            description: Some("Swiss mathematician (1667-1748)".into()),
            claims: vec![Claim {
                property: pid("P184"),
                label: Some("doctoral advisor".into()),
                values: vec![ClaimValue {
                    value: ValueNode::Entity {
                        id: qid("Q122404"),
                        label: Some("Jacob Bernoulli".into()),
                    },
                    qualifiers: vec![],
                }],
            }],
        },
    );

    kb.examples.insert(
        "P185".into(),
        vec![
            PropertyExample {
                subject: qid("Q57246"),
                subject_label: Some("Johann Bernoulli".into()),
                object: ValueNode::Entity { id: qid("Q7604"), label: Some("Leonhard Euler".into()) },
            },
            PropertyExample {
                subject: qid("Q7604"),
                subject_label: Some("Leonhard Euler".into()),
                object: ValueNode::Entity {
                    id: qid("Q2085"),
                    label: Some("Johann Hennert".into()),
                },
            },
        ],
    );

    let kb = kb
        .with_sparql(
            "SELECT ?advisor WHERE { wd:Q7604 wdt:P184 ?advisor }",
            table(&["advisor"], vec![vec![uri_cell("Q57246")]]),
        )
        .with_sparql(
            // hallucinated QID: no results
            "SELECT ?doctor ?doctorMaster WHERE { wd:Q999999 wdt:P184* ?doctor . ?doctor wdt:P184 ?doctorMaster }",
            table(&["doctor", "doctorMaster"], vec![]),
        )
        .with_sparql(
            "ASK WHERE { wd:Q57246 wdt:P184 ?x }",
            SparqlResponse::Boolean { value: true },
        )
        .with_sparql(
            "SELECT ?doctor WHERE { wd:Q7604 wdt:P184* ?doctor }",
            table(
                &["doctor"],
                vec![vec![uri_cell("Q7604")], vec![uri_cell("Q57246")], vec![uri_cell("Q122404")]],
            ),
        )
        .with_sparql(
            "SELECT ?student WHERE { ?student wdt:P184 wd:Q7604 }",
            table(&["student"], vec![vec![uri_cell("Q2085")]]),
        )
        .with_sparql(
            "SELECT ?doctor WHERE { wd:Q7604 (wdt:P185/(wdt:P185?)) ?doctor }",
            table(&["doctor"], vec![vec![uri_cell("Q2085")], vec![uri_cell("Q200340")]]),
        );

    // the final query returns a larger table so the trace exercises the
    // first-5/last-5 rendering rule
    let final_rows: Vec<Vec<Option<SparqlCell>>> = (0..12)
        .map(|i| vec![uri_cell(&format!("Q{}", 1000 + i)), uri_cell(&format!("Q{}", 2000 + i))])
        .collect();
    kb.with_sparql(FINAL_SPARQL, table(&["doctor", "doctorMaster"], final_rows))
}

/// The 13 policy outputs (plus two prune outputs interleaved where
/// `get_wikidata_entry` runs).
fn scripted_responses() -> Vec<String> {
    let euler_prune = r#"{
  "doctoral advisor (P184)": "Johann Bernoulli (Q57246)",
  "instance of (P31)": "human (Q5)"
}"#;
    let bernoulli_prune = r#"{
  "doctoral advisor (P184)": "Jacob Bernoulli (Q122404)"
}"#;
    vec![
        // 1: find the advisor property
        "Thought: I need the property connecting a person to their doctoral advisor.\nAction: search_wikidata(doctoral advisor)".to_string(),
        // 2: find Euler's QID
        "Thought: Now I need the QID for Leonhard Euler.\nAction: search_wikidata(Leonhard Euler)".to_string(),
        // 3: inspect the entity (prune call follows)
        "Thought: Let me look at Euler's entry to confirm P184 is present.\nAction: get_wikidata_entry(Q7604)".to_string(),
        euler_prune.to_string(),
        // 4: simplest fragment
        "Thought: Confirm the advisor edge with a minimal query.\nAction: execute_sparql(SELECT ?advisor WHERE { wd:Q7604 wdt:P184 ?advisor })".to_string(),
        // 5: one-shot attempt with a hallucinated QID fails (no results)
        "Thought: Try the full chain in one go.\nAction: execute_sparql(SELECT ?doctor ?doctorMaster WHERE { wd:Q999999 wdt:P184* ?doctor . ?doctor wdt:P184 ?doctorMaster })".to_string(),
        // 6: debug with an ASK
        "Thought: No results. Double-check that Johann Bernoulli has an advisor edge.\nAction: execute_sparql(ASK WHERE { wd:Q57246 wdt:P184 ?x })".to_string(),
        // 7: inspect the advisor entity (prune call follows)
        "Thought: Inspect Johann Bernoulli's entry; the root QID I used before must be wrong.\nAction: get_wikidata_entry(Q57246)".to_string(),
        bernoulli_prune.to_string(),
        // 8: check how the student property is used
        "Thought: I also need the student direction; check how P185 is used.\nAction: get_property_examples(P185)".to_string(),
        // 9: advisor closure from the correct root
        "Thought: Use the correct root Q7604 and fetch the advisor chain.\nAction: execute_sparql(SELECT ?doctor WHERE { wd:Q7604 wdt:P184* ?doctor })".to_string(),
        // 10: students via the inverse edge
        "Thought: Check the student direction for Euler.\nAction: execute_sparql(SELECT ?student WHERE { ?student wdt:P184 wd:Q7604 })".to_string(),
        // 11: limited student-descendant fragment
        "Thought: Build the student-descendant fragment with bounded depth.\nAction: execute_sparql(SELECT ?doctor WHERE { wd:Q7604 (wdt:P185/(wdt:P185?)) ?doctor })".to_string(),
        // 12: the complete query
        format!("Thought: Combine both directions and return each person with their advisor.\nAction: execute_sparql({FINAL_SPARQL})"),
        // 13: done
        "Thought: The results look complete; the last query is the answer.\nAction: stop()".to_string(),
    ]
}

fn run_with_recording(transcript_path: &Path) -> AgentOutcome {
    let kb = canned_kb();
    let scripted = ReplayProvider::from_responses(scripted_responses());
    let recorder = RecordingProvider::create(scripted, transcript_path).unwrap();
    let gateway = LlmGateway::new(Arc::new(recorder), None);
    run_agent(QUESTION, &AgentConfig::default(), &kb, &gateway).unwrap()
}

/// Rebuilds the golden fixtures. Run manually after deliberate changes to
/// prompts or renderers, then review the diff.
#[test]
#[ignore = "writes the golden fixtures; run explicitly and review the diff"]
fn regenerate() {
    let dir = fixture_dir();
    std::fs::create_dir_all(&dir).unwrap();
    let outcome = run_with_recording(&dir.join("transcript.jsonl"));
    assert_eq!(outcome.stop_reason, StopReason::Stopped);
    std::fs::write(
        dir.join("kb.json"),
        serde_json::to_string_pretty(&canned_kb()).unwrap(),
    )
    .unwrap();
    std::fs::write(
        dir.join("trace.json"),
        serde_json::to_string_pretty(&outcome).unwrap(),
    )
    .unwrap();
    std::fs::write(dir.join("final.sparql"), FINAL_SPARQL).unwrap();
}

#[test]
fn replay_reproduces_the_thirteen_action_trace_byte_for_byte() {
    let dir = fixture_dir();
    let kb = MemoryKb::load(&dir.join("kb.json")).unwrap();
    let provider = ReplayProvider::from_file(&dir.join("transcript.jsonl")).unwrap();
    let gateway = LlmGateway::new(Arc::new(provider), None);

    let outcome = run_agent(QUESTION, &AgentConfig::default(), &kb, &gateway).unwrap();

    assert_eq!(outcome.stop_reason, StopReason::Stopped);
    assert_eq!(outcome.actions_taken, 13);
    assert!(matches!(outcome.trace.steps.last().unwrap().action, Action::Stop));

    let expected_final = std::fs::read_to_string(dir.join("final.sparql")).unwrap();
    assert_eq!(outcome.final_sparql.as_deref(), Some(expected_final.as_str()));

    let golden = std::fs::read_to_string(dir.join("trace.json")).unwrap();
    let replayed = serde_json::to_string_pretty(&outcome).unwrap();
    assert_eq!(replayed, golden, "replayed trace differs from the golden trace");

    // 15 recorded calls: 13 policy rounds plus 2 prune calls
    assert_eq!(gateway.calls_used(), 15);
}

#[test]
fn replayed_trace_contains_the_truncated_table_observation() {
    let dir = fixture_dir();
    let kb = MemoryKb::load(&dir.join("kb.json")).unwrap();
    let provider = ReplayProvider::from_file(&dir.join("transcript.jsonl")).unwrap();
    let gateway = LlmGateway::new(Arc::new(provider), None);
    let outcome = run_agent(QUESTION, &AgentConfig::default(), &kb, &gateway).unwrap();

    // the final query's 12-row table renders as 5 + 5 rows plus the count
    let final_obs = &outcome.trace.steps[11].observation;
    assert!(final_obs.contains("(12 rows)"), "{final_obs}");
    assert!(final_obs.contains("..."));
    assert_eq!(kbqa::kb::rendered_data_rows(final_obs), 10);

    // every non-stop step's observation is the rendering of its payload
    for step in &outcome.trace.steps {
        match &step.payload {
            Some(payload) => {
                assert_eq!(step.observation, kbqa::kb::render_observation(payload))
            }
            None => assert!(matches!(step.action, Action::Stop)),
        }
    }
}
