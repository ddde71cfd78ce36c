//! Instructions are written in Markdown and rendered to a sanitized node
//! tree; raw HTML and script links never survive.

use crowdqc::markdown::render_markdown;

fn main() {
    let text = "# Welcome\n\nPick **one** intent per message.\n\n\
                - see the [guide](https://example.org/guide)\n\
                - ignore [this](javascript:alert(1))\n\n<script>alert(1)</script>\n";
    let nodes = render_markdown(text);
    println!("{}", serde_json::to_string_pretty(&nodes).unwrap());
}
