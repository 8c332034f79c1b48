use std::collections::BTreeMap;
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};

use super::{MapError, MapLocation, MapObject, MapPosition, Placement, SemanticMap, SCHEMA_VERSION};

/// Parses and validates a semantic map.
pub fn parse_map(xml: &str) -> Result<SemanticMap, MapError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);
    let mut map = SemanticMap::empty();
    let mut stack: Vec<String> = Vec::new();
    let mut root_seen = false;

    loop {
        let offset = skip_ws(xml, reader.buffer_position() as usize);
        let event = reader
            .read_event()
            .map_err(|e| located(xml, skip_ws(xml, reader.error_position() as usize), e.to_string()))?;
        match event {
            Event::Start(e) => {
                let name = element(&e, &stack, &mut map, &mut root_seen).map_err(|m| located(xml, offset, m))?;
                stack.push(name);
            }
            Event::Empty(e) => {
                element(&e, &stack, &mut map, &mut root_seen).map_err(|m| located(xml, offset, m))?;
            }
            Event::End(_) => {
                stack.pop();
            }
            Event::Text(_) | Event::CData(_) => {
                return Err(located(xml, offset, "unexpected text content".into()));
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !root_seen {
        return Err(located(xml, xml.len(), "missing <semantic_map> root".into()));
    }
    map.validate()?;
    Ok(map)
}

fn element(
    e: &BytesStart<'_>,
    stack: &[String],
    map: &mut SemanticMap,
    root_seen: &mut bool,
) -> Result<String, String> {
    let name = e.name().into_inner().to_string();
    let attrs = attributes(e)?;
    let get = |key: &str| {
        attrs
            .get(key)
            .cloned()
            .ok_or_else(|| format!("<{name}> is missing attribute `{key}`"))
    };
    let coords = || -> Result<[f64; 3], String> {
        let mut out = [0.0; 3];
        for (slot, key) in out.iter_mut().zip(["x", "y", "z"]) {
            let raw = get(key)?;
            *slot = raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("<{name}> attribute `{key}` is not a number: `{raw}`"))?;
        }
        Ok(out)
    };

    match (stack.last().map(String::as_str), name.as_str()) {
        (None, "semantic_map") => {
            if *root_seen {
                return Err("more than one root element".into());
            }
            *root_seen = true;
            let version = get("version")?;
            if version.trim() != SCHEMA_VERSION.to_string() {
                return Err(format!("unsupported schema version `{version}`"));
            }
        }
        (None, other) => return Err(format!("expected <semantic_map> root, found <{other}>")),
        (Some("semantic_map"), "objects" | "positions" | "locations") => {}
        (Some("semantic_map"), "robot") => {
            map.robot = Some(get("location")?);
        }
        (Some("objects"), "object") => {
            let held = attrs.get("held").map(|v| v == "true").unwrap_or(false);
            map.objects.push(MapObject {
                id: get("id")?,
                name: get("name")?,
                color: attrs.get("color").cloned().unwrap_or_default(),
                shape: attrs.get("shape").cloned().unwrap_or_default(),
                placement: if held { Placement::Held } else { Placement::At(coords()?) },
            });
        }
        (Some("positions"), "position") => {
            if let Some(capacity) = attrs.get("capacity") {
                if capacity.trim() != "1" {
                    return Err(format!("position capacity must be 1, found `{capacity}`"));
                }
            }
            map.positions.push(MapPosition {
                id: get("id")?,
                coords: coords()?,
                front: attrs.get("front").cloned(),
            });
        }
        (Some("locations"), "location") => {
            let id = get("id")?;
            map.locations.push(MapLocation {
                name: attrs.get("name").cloned().unwrap_or_else(|| id.replace('_', " ")),
                id,
                positions: Vec::new(),
            });
        }
        (Some("location"), "contains") => {
            let p = get("position")?;
            map.locations.last_mut().expect("inside <location>").positions.push(p);
        }
        (Some(parent), other) => return Err(format!("unexpected <{other}> inside <{parent}>")),
    }
    Ok(name)
}

fn attributes(e: &BytesStart<'_>) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| err.to_string())?;
        let key = attr.key.into_inner().to_string();
        let value = attr
            .normalized_value(XmlVersion::Implicit1_0)
            .map_err(|err| err.to_string())?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn skip_ws(xml: &str, at: usize) -> usize {
    at + xml.get(at..).map_or(0, |rest| rest.len() - rest.trim_start().len())
}

fn located(xml: &str, offset: usize, message: String) -> MapError {
    let offset = offset.min(xml.len());
    let before = &xml[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    MapError::Xml { line, column, message }
}

/// Writes `map` in the canonical layout; `parse_map` reads it back unchanged.
pub fn serialize_map(map: &SemanticMap) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<semantic_map version=\"{SCHEMA_VERSION}\">");

    if map.objects.is_empty() {
        out.push_str("  <objects/>\n");
    } else {
        out.push_str("  <objects>\n");
        for o in &map.objects {
            let _ = write!(
                out,
                "    <object id=\"{}\" name=\"{}\" color=\"{}\" shape=\"{}\"",
                escape(&o.id),
                escape(&o.name),
                escape(&o.color),
                escape(&o.shape)
            );
            match &o.placement {
                Placement::At(c) => {
                    let _ = writeln!(out, " x=\"{}\" y=\"{}\" z=\"{}\"/>", c[0], c[1], c[2]);
                }
                Placement::Held => out.push_str(" held=\"true\"/>\n"),
            }
        }
        out.push_str("  </objects>\n");
    }

    if map.positions.is_empty() {
        out.push_str("  <positions/>\n");
    } else {
        out.push_str("  <positions>\n");
        for p in &map.positions {
            let _ = write!(
                out,
                "    <position id=\"{}\" x=\"{}\" y=\"{}\" z=\"{}\" capacity=\"1\"",
                escape(&p.id),
                p.coords[0],
                p.coords[1],
                p.coords[2]
            );
            if let Some(front) = &p.front {
                let _ = write!(out, " front=\"{}\"", escape(front));
            }
            out.push_str("/>\n");
        }
        out.push_str("  </positions>\n");
    }

    if !map.locations.is_empty() {
        out.push_str("  <locations>\n");
        for l in &map.locations {
            let _ = writeln!(out, "    <location id=\"{}\" name=\"{}\">", escape(&l.id), escape(&l.name));
            for p in &l.positions {
                let _ = writeln!(out, "      <contains position=\"{}\"/>", escape(p));
            }
            out.push_str("    </location>\n");
        }
        out.push_str("  </locations>\n");
    }
    if let Some(robot) = &map.robot {
        let _ = writeln!(out, "  <robot location=\"{}\"/>", escape(robot));
    }
    out.push_str("</semantic_map>\n");
    out
}
