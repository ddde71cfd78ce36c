//! Sanitized Markdown rendering for instructions, examples and consent text.
//!
//! Supports a CommonMark subset: headings, emphasis, lists, links, inline code,
//! code blocks, block quotes and rules. Raw HTML never survives: tags are
//! stripped and their inner text kept as plain text. Links with a scheme other
//! than http, https or mailto lose their target and render as text.

use pulldown_cmark::{CodeBlockKind, Event, HeadingLevel, Parser, Tag};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MdNode {
    Heading { level: u8, children: Vec<MdNode> },
    Paragraph { children: Vec<MdNode> },
    Emphasis { children: Vec<MdNode> },
    Strong { children: Vec<MdNode> },
    List {
        ordered: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        start: Option<u64>,
        items: Vec<MdNode>,
    },
    ListItem { children: Vec<MdNode> },
    Link { href: String, children: Vec<MdNode> },
    BlockQuote { children: Vec<MdNode> },
    Code { text: String },
    CodeBlock {
        #[serde(skip_serializing_if = "Option::is_none")]
        language: Option<String>,
        text: String,
    },
    Text { text: String },
    LineBreak,
    Rule,
}

enum Frame {
    Heading(u8),
    Paragraph,
    Emphasis,
    Strong,
    List(Option<u64>),
    ListItem,
    Link(Option<String>),
    BlockQuote,
    CodeBlock(Option<String>),
    /// Raw HTML block; its stripped text becomes a paragraph.
    Html,
    /// Unsupported container: children are spliced into the parent.
    Transparent,
}

/// Renders Markdown into a sanitized tree. Never fails; unsupported syntax
/// degrades to its text content.
pub fn render_markdown(text: &str) -> Vec<MdNode> {
    let mut stack: Vec<(Frame, Vec<MdNode>)> = vec![(Frame::Transparent, Vec::new())];

    for event in Parser::new(text) {
        match event {
            Event::Start(tag) => {
                let frame = match tag {
                    Tag::Heading { level, .. } => Frame::Heading(heading_level(level)),
                    Tag::Paragraph => Frame::Paragraph,
                    Tag::Emphasis => Frame::Emphasis,
                    Tag::Strong => Frame::Strong,
                    Tag::List(start) => Frame::List(start),
                    Tag::Item => Frame::ListItem,
                    Tag::Link { dest_url, .. } => Frame::Link(safe_href(&dest_url)),
                    Tag::BlockQuote(_) => Frame::BlockQuote,
                    Tag::CodeBlock(kind) => Frame::CodeBlock(match kind {
                        CodeBlockKind::Fenced(lang) if !lang.is_empty() => {
                            Some(lang.to_string())
                        }
                        _ => None,
                    }),
                    Tag::HtmlBlock => Frame::Html,
                    _ => Frame::Transparent,
                };
                stack.push((frame, Vec::new()));
            }
            Event::End(_) => {
                if stack.len() > 1 {
                    let (frame, children) = stack.pop().expect("non-root frame");
                    let parent = &mut stack.last_mut().expect("root frame").1;
                    close_frame(frame, children, parent);
                }
            }
            Event::Text(t) => push_text(current(&mut stack), &t),
            Event::Code(t) => current(&mut stack).push(MdNode::Code { text: t.to_string() }),
            Event::Html(t) | Event::InlineHtml(t) => {
                let stripped = strip_tags(&t);
                push_text(current(&mut stack), &stripped);
            }
            Event::SoftBreak => push_text(current(&mut stack), " "),
            Event::HardBreak => current(&mut stack).push(MdNode::LineBreak),
            Event::Rule => current(&mut stack).push(MdNode::Rule),
            Event::InlineMath(t) | Event::DisplayMath(t) => push_text(current(&mut stack), &t),
            Event::FootnoteReference(_) | Event::TaskListMarker(_) => {}
        }
    }

    while stack.len() > 1 {
        let (frame, children) = stack.pop().expect("non-root frame");
        let parent = &mut stack.last_mut().expect("root frame").1;
        close_frame(frame, children, parent);
    }
    stack.pop().map(|(_, nodes)| nodes).unwrap_or_default()
}

fn current(stack: &mut [(Frame, Vec<MdNode>)]) -> &mut Vec<MdNode> {
    &mut stack.last_mut().expect("root frame").1
}

fn close_frame(frame: Frame, children: Vec<MdNode>, parent: &mut Vec<MdNode>) {
    let node = match frame {
        Frame::Heading(level) => MdNode::Heading { level, children },
        Frame::Paragraph => MdNode::Paragraph { children },
        Frame::Emphasis => MdNode::Emphasis { children },
        Frame::Strong => MdNode::Strong { children },
        Frame::List(start) => MdNode::List {
            ordered: start.is_some(),
            start,
            items: children,
        },
        Frame::ListItem => MdNode::ListItem { children },
        Frame::Link(Some(href)) => MdNode::Link { href, children },
        Frame::BlockQuote => MdNode::BlockQuote { children },
        Frame::CodeBlock(language) => MdNode::CodeBlock {
            language,
            text: children.iter().map(plain_text).collect(),
        },
        Frame::Html => {
            let text: String = children.iter().map(plain_text).collect();
            let text = text.trim();
            if text.is_empty() {
                return;
            }
            MdNode::Paragraph {
                children: vec![MdNode::Text { text: text.to_owned() }],
            }
        }
        Frame::Link(None) | Frame::Transparent => {
            for child in children {
                match child {
                    MdNode::Text { text } => push_text(parent, &text),
                    other => parent.push(other),
                }
            }
            return;
        }
    };
    parent.push(node);
}

fn push_text(nodes: &mut Vec<MdNode>, text: &str) {
    if text.is_empty() {
        return;
    }
    if let Some(MdNode::Text { text: last }) = nodes.last_mut() {
        last.push_str(text);
    } else {
        nodes.push(MdNode::Text { text: text.to_owned() });
    }
}

/// Concatenated text content of a node.
pub fn plain_text(node: &MdNode) -> String {
    match node {
        MdNode::Text { text } | MdNode::Code { text } | MdNode::CodeBlock { text, .. } => {
            text.clone()
        }
        MdNode::LineBreak => "\n".into(),
        MdNode::Rule => String::new(),
        MdNode::List { items, .. } => items.iter().map(plain_text).collect(),
        MdNode::Heading { children, .. }
        | MdNode::Paragraph { children }
        | MdNode::Emphasis { children }
        | MdNode::Strong { children }
        | MdNode::ListItem { children }
        | MdNode::Link { children, .. }
        | MdNode::BlockQuote { children } => children.iter().map(plain_text).collect(),
    }
}

fn heading_level(level: HeadingLevel) -> u8 {
    match level {
        HeadingLevel::H1 => 1,
        HeadingLevel::H2 => 2,
        HeadingLevel::H3 => 3,
        HeadingLevel::H4 => 4,
        HeadingLevel::H5 => 5,
        HeadingLevel::H6 => 6,
    }
}

fn safe_href(dest: &str) -> Option<String> {
    let trimmed = dest.trim();
    let scheme_end = trimmed.find(':');
    let path_start = trimmed.find(['/', '?', '#']);
    let has_scheme = match (scheme_end, path_start) {
        (Some(colon), Some(slash)) => colon < slash,
        (Some(_), None) => true,
        _ => false,
    };
    if !has_scheme {
        return Some(trimmed.to_owned());
    }
    let scheme = trimmed[..scheme_end.unwrap()].to_ascii_lowercase();
    matches!(scheme.as_str(), "http" | "https" | "mailto").then(|| trimmed.to_owned())
}

fn strip_tags(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut rest = html;
    while let Some(open) = rest.find('<') {
        out.push_str(&rest[..open]);
        let after = &rest[open..];
        let close = if after.starts_with("<!--") {
            after.find("-->").map(|i| i + 3)
        } else {
            after.find('>').map(|i| i + 1)
        };
        match close {
            Some(end) => rest = &after[end..],
            None => {
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}
