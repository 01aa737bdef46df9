//! The eight workbench queries. Endpoint IRIs are written as `{{name}}`
//! placeholders and filled in once the deployment's addresses are known.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkbenchQuery {
    pub name: &'static str,
    pub file: &'static str,
    pub template: &'static str,
}

pub const QUERIES: [WorkbenchQuery; 8] = [
    WorkbenchQuery {
        name: "Q1",
        file: "q1.rq",
        template: include_str!("../queries/q1.rq"),
    },
    WorkbenchQuery {
        name: "Q2",
        file: "q2.rq",
        template: include_str!("../queries/q2.rq"),
    },
    WorkbenchQuery {
        name: "Q3",
        file: "q3.rq",
        template: include_str!("../queries/q3.rq"),
    },
    WorkbenchQuery {
        name: "Q4",
        file: "q4.rq",
        template: include_str!("../queries/q4.rq"),
    },
    WorkbenchQuery {
        name: "Q5",
        file: "q5.rq",
        template: include_str!("../queries/q5.rq"),
    },
    WorkbenchQuery {
        name: "Q6",
        file: "q6.rq",
        template: include_str!("../queries/q6.rq"),
    },
    WorkbenchQuery {
        name: "Q7",
        file: "q7.rq",
        template: include_str!("../queries/q7.rq"),
    },
    WorkbenchQuery {
        name: "Q8",
        file: "q8.rq",
        template: include_str!("../queries/q8.rq"),
    },
];

pub fn query(name: &str) -> Option<&'static WorkbenchQuery> {
    QUERIES.iter().find(|q| q.name == name)
}

/// Replaces every `{{name}}` with its endpoint URL.
pub fn render(template: &str, endpoints: &BTreeMap<String, String>) -> Result<String, String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        let close = rest[open..]
            .find("}}")
            .map(|c| open + c)
            .ok_or_else(|| "unterminated {{ placeholder".to_owned())?;
        let name = &rest[open + 2..close];
        let url = endpoints
            .get(name)
            .ok_or_else(|| format!("no endpoint named '{name}'"))?;
        out.push_str(&rest[..open]);
        out.push_str(url);
        rest = &rest[close + 2..];
    }
    out.push_str(rest);
    Ok(out)
}
