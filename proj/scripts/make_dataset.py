#!/usr/bin/env python3
"""Generates the bundled benchmark corpus under data/.

Produces catalog.json plus 101 case files in data/flowbench/ with their
context/ and output/ BPMN documents. BPMN is produced by the flowgen CLI so
the corpus is consistent with the compiler by construction.

Usage: scripts/make_dataset.py <path-to-flowgen-binary>

Deterministic: fixed seed, stable iteration order. Re-running overwrites
data/ in place.
"""

import json
import os
import random
import subprocess
import sys

ROOT = os.path.normpath(os.path.join(os.path.dirname(__file__), ".."))
DATA = os.path.join(ROOT, "data")
BENCH = os.path.join(DATA, "flowbench")

# ---------------------------------------------------------------------------
# catalog

CONNECTORS = [
    ("GitHub", "3_0_0", ["Repository", "Issue", "PullRequest", "Branch"]),
    ("Jira", "2_0_0", ["Issue", "Project", "Sprint"]),
    ("Slack", "1_2_0", ["Message", "Channel", "Reminder"]),
    ("Gmail", "1_0_0", ["Email", "Label", "Draft"]),
    ("Salesforce", "4_1_0", ["Lead", "Contact", "Opportunity", "Account"]),
    ("Stripe", "2_0_0", ["Customer", "Invoice", "Charge", "Refund"]),
    ("Trello", "1_0_0", ["Card", "Board", "Checklist"]),
    ("Zendesk", "2_1_0", ["Ticket", "Organization"]),
    ("Dropbox", "1_0_0", ["File", "Folder"]),
    ("Asana", "1_1_0", ["Task", "Section"]),
    ("Shopify", "3_0_0", ["Order", "Product", "Discount"]),
    ("Twilio", "1_0_0", ["Sms", "Call"]),
    ("HubSpot", "2_0_0", ["Deal", "Company"]),
    ("Workday", "1_0_0", ["Worker", "Timeoff"]),
    ("ServiceNow", "2_0_0", ["Incident", "Change"]),
]

# never referenced by any case; they exist so top-k retrieval stays meaningful
DISTRACTOR_CONNECTORS = [
    ("Notion", "1_0_0", ["Page", "Database", "Block"]),
    ("Airtable", "1_0_0", ["Record", "Table"]),
    ("Outlook", "2_0_0", ["Mail", "Event", "Calendar"]),
    ("Teams", "1_0_0", ["Chat", "Meeting"]),
    ("Box", "1_0_0", ["Document", "Share"]),
    ("Monday", "1_0_0", ["Item", "Group"]),
    ("Pipedrive", "1_0_0", ["Person", "Activity"]),
    ("Quickbooks", "2_0_0", ["Bill", "Payment", "Vendor"]),
    ("Xero", "1_0_0", ["Receipt", "Statement"]),
    ("Intercom", "1_0_0", ["Conversation", "Segment"]),
    ("Freshdesk", "1_0_0", ["Problem", "Agent"]),
    ("Mailchimp", "1_0_0", ["Campaign", "Audience"]),
    ("Docusign", "1_0_0", ["Envelope", "Template"]),
    ("Okta", "1_0_0", ["Application", "Session"]),
    ("Jenkins", "1_0_0", ["Build", "Pipeline"]),
    ("Confluence", "1_0_0", ["Space", "Attachment"]),
    ("Bitbucket", "1_0_0", ["Commit", "Tag"]),
    ("Gitlab", "2_0_0", ["Merge", "Runner"]),
    ("Figma", "1_0_0", ["Frame", "Comment"]),
    ("Linear", "1_0_0", ["Cycle", "Milestone"]),
    ("Calendly", "1_0_0", ["Booking", "Invitee"]),
    ("Typeform", "1_0_0", ["Form", "Response"]),
    ("Surveymonkey", "1_0_0", ["Survey", "Collector"]),
    ("Webex", "1_0_0", ["Room", "Recording"]),
    ("Datadog", "1_0_0", ["Monitor", "Dashboard"]),
    ("Pagerduty", "1_0_0", ["Alert", "Schedule"]),
    ("Snowflake", "1_0_0", ["Warehouse", "View"]),
]

OPS = [
    ("create", "Create a new {el} in {c}"),
    ("retrieve", "Retrieve all {el}s from {c}"),
    ("retrievewithwhere", "Retrieve the {el}s from {c} that match a filter"),
    ("update", "Update an existing {el} in {c}"),
    ("delete", "Delete a {el} from {c}"),
]


def build_catalog():
    catalog = []
    for conn, ver, entities in CONNECTORS + DISTRACTOR_CONNECTORS:
        for entity in entities:
            for op, tmpl in OPS:
                catalog.append({
                    "id": f"{conn}_{entity}__{ver}__{op}_{entity}",
                    "description": tmpl.format(el=entity.lower(), c=conn),
                })
    return catalog


def act(conn, entity, op):
    for c, ver, entities in CONNECTORS:
        if c == conn:
            assert entity in entities, (conn, entity)
            return f"{conn}_{entity}__{ver}__{op}_{entity}"
    raise KeyError(conn)


def var(entity, plural=False):
    v = entity.lower()
    return v + "s" if plural else v


# ---------------------------------------------------------------------------
# case construction

CASES = []


def add_case(tags, utterance, expected, prior=None):
    CASES.append({
        "tags": tags,
        "utterance": utterance,
        "prior": prior,
        "expected": expected,
    })


def linear(*calls):
    return "\n".join(f"{v} = {a}()" for v, a in calls)


def make_cases(rng):
    # -- the canonical worked example (uid 97 slot) ------------------------
    add_case(
        ["conditional_update"],
        "Instead of retrieving all the issues \njust create a new issue in each repo",
        "repositories = GitHub_Repository__3_0_0__retrievewithwhere_Repository()\n"
        "for repo in repositories:\n"
        "  updated_issue = GitHub_Issue__3_0_0__create_Issue()",
        prior="repositories = GitHub_Repository__3_0_0__retrievewithwhere_Repository()\n"
        "for repo in repositories:\n"
        "  new_issue = GitHub_Issue__3_0_0__retrievewithwhere_Issue()",
    )

    # -- initial linear cases ----------------------------------------------
    linear_specs = [
        (("Jira", "Issue", "retrievewithwhere"), ("Slack", "Message", "create"),
         "Retrieve the issues from Jira that match a filter and post a Slack message"),
        (("Salesforce", "Lead", "create"), ("Gmail", "Email", "create"),
         "Create a new lead in Salesforce and then create a new email in Gmail"),
        (("Stripe", "Invoice", "create"), ("Slack", "Message", "create"),
         "Create a new invoice in Stripe and announce it with a new Slack message"),
        (("Zendesk", "Ticket", "retrieve"), ("Trello", "Card", "create"),
         "Retrieve all tickets from Zendesk and create a new card in Trello"),
        (("Shopify", "Order", "retrieve"), ("Gmail", "Email", "create"),
         "Retrieve all orders from Shopify and create a new email in Gmail"),
        (("Dropbox", "File", "retrieve"), ("Slack", "Message", "create"),
         "Retrieve all files from Dropbox then create a new message in Slack"),
        (("HubSpot", "Deal", "create"), ("Slack", "Message", "create"),
         "Create a new deal in HubSpot and send a Slack message about it"),
        (("Workday", "Worker", "retrieve"), ("Gmail", "Email", "create"),
         "Pull the full roster and email a summary"),
        (("ServiceNow", "Incident", "create"), ("Twilio", "Sms", "create"),
         "Open an incident and text the on-call engineer"),
        (("Asana", "Task", "create"), ("Slack", "Reminder", "create"),
         "Create a new task in Asana and create a new reminder in Slack"),
        (("Trello", "Board", "create"), ("Trello", "Card", "create"),
         "Create a new board in Trello and then a new card in Trello"),
        (("Gmail", "Label", "create"), ("Gmail", "Email", "update"),
         "Create a new label in Gmail and update an existing email in Gmail"),
        (("Stripe", "Refund", "create"), ("Zendesk", "Ticket", "update"),
         "Issue the refund and close out the support thread"),
        (("Salesforce", "Opportunity", "retrievewithwhere"), ("HubSpot", "Deal", "update"),
         "Retrieve the opportunities from Salesforce that match a filter and update an existing deal in HubSpot"),
        (("Twilio", "Call", "create"), ("ServiceNow", "Incident", "update"),
         "Ring the customer back and note it on the record"),
    ]
    for (a_conn, a_ent, a_op), (b_conn, b_ent, b_op), utt in linear_specs:
        seq = linear((var(a_ent, a_op.startswith("retrieve")), act(a_conn, a_ent, a_op)),
                     (var(b_ent), act(b_conn, b_ent, b_op)))
        add_case(["creation", "linear"], utt, seq)

    # -- initial with user task --------------------------------------------
    user_specs = [
        (("Salesforce", "Contact", "create"), "review the new contact details",
         "Create a new contact in Salesforce and have someone review the new contact details"),
        (("Stripe", "Charge", "create"), "approve the charge",
         "Create a new charge in Stripe but let a manager approve the charge first"),
        (("Jira", "Project", "create"), "assign a project lead",
         "Create a new project in Jira and ask an admin to assign a project lead"),
        (("Shopify", "Discount", "create"), "confirm the discount terms",
         "Create a new discount in Shopify after someone confirms the discount terms"),
        (("Workday", "Timeoff", "create"), "approve the time off request",
         "File the leave and route it for sign-off"),
    ]
    for (conn, ent, op), task, utt in user_specs:
        seq = (f"{var(ent)} = {act(conn, ent, op)}()\n"
               f"user_task(\"{task}\")")
        add_case(["creation", "linear", "user_task"], utt, seq)

    # -- initial conditional ------------------------------------------------
    cond_specs = [
        (("Zendesk", "Ticket", "retrievewithwhere"), "len(tickets) > 10",
         ("Slack", "Message", "create"), ("Gmail", "Email", "create"),
         "Retrieve the tickets from Zendesk that match a filter; if there are more "
         "than ten create a new message in Slack otherwise create a new email in Gmail"),
        (("Stripe", "Invoice", "retrievewithwhere"), "invoices is not None",
         ("Stripe", "Customer", "update"), None,
         "Retrieve the invoices from Stripe that match a filter and if any exist "
         "update an existing customer in Stripe"),
        (("Salesforce", "Account", "retrievewithwhere"), "len(accounts) == 0",
         ("Salesforce", "Account", "create"), None,
         "Retrieve the accounts from Salesforce that match a filter and create a "
         "new account in Salesforce when none exist"),
        (("GitHub", "PullRequest", "retrievewithwhere"), "len(pullrequests) > 0",
         ("Slack", "Message", "create"), ("Twilio", "Sms", "create"),
         "Check for waiting reviews and ping the channel, or fall back to a text"),
        (("Shopify", "Product", "retrievewithwhere"), "len(products) < 5",
         ("Shopify", "Product", "create"), None,
         "Top up the inventory listing when it runs low"),
    ]
    for (c1, e1, o1), cond, (c2, e2, o2), else_call, utt in cond_specs:
        lines = [f"{var(e1, True)} = {act(c1, e1, o1)}()",
                 f"if {cond}:",
                 f"  {var(e2)} = {act(c2, e2, o2)}()"]
        if else_call:
            c3, e3, o3 = else_call
            lines += ["else:", f"  {var(e3)} = {act(c3, e3, o3)}()"]
        add_case(["creation", "conditional"], utt, "\n".join(lines))

    # -- initial loops -------------------------------------------------------
    loop_specs = [
        (("Jira", "Issue", "retrieve"), ("Slack", "Message", "create"),
         "Retrieve all issues from Jira and create a new message in Slack for each issue"),
        (("Salesforce", "Lead", "retrievewithwhere"), ("Gmail", "Email", "create"),
         "Retrieve the leads from Salesforce that match a filter and create a new email in Gmail for each lead"),
        (("Shopify", "Order", "retrievewithwhere"), ("Stripe", "Invoice", "create"),
         "Retrieve the orders from Shopify that match a filter and create a new invoice in Stripe for every order"),
        (("Dropbox", "Folder", "retrieve"), ("Dropbox", "File", "delete"),
         "Go through every folder and clear out the stale attachments"),
        (("GitHub", "Repository", "retrieve"), ("GitHub", "Branch", "delete"),
         "Retrieve all repositorys from GitHub and delete a branch from GitHub in each one"),
        (("Zendesk", "Organization", "retrieve"), ("Zendesk", "Ticket", "create"),
         "Retrieve all organizations from Zendesk and create a new ticket in Zendesk for each"),
        (("HubSpot", "Company", "retrievewithwhere"), ("HubSpot", "Deal", "create"),
         "Retrieve the companys from HubSpot that match a filter and open a deal for each one"),
    ]
    for (c1, e1, o1), (c2, e2, o2), utt in loop_specs:
        it = var(e1, True)
        seq = (f"{it} = {act(c1, e1, o1)}()\n"
               f"for {var(e1)} in {it}:\n"
               f"  {var(e2)} = {act(c2, e2, o2)}()")
        add_case(["creation", "loop"], utt, seq)

    # while loops
    add_case(["creation", "loop"],
             "Keep creating new cards in Trello while the backlog flag stays set",
             "while backlog_remaining:\n"
             "  card = Trello_Card__1_0_0__create_Card()")
    add_case(["creation", "loop", "user_task"],
             "While the queue is not empty have an agent triage the next ticket "
             "and update an existing ticket in Zendesk",
             "while queue_not_empty:\n"
             "  user_task(\"triage the next ticket\")\n"
             "  ticket = Zendesk_Ticket__2_1_0__update_Ticket()")

    # a couple of deeper initial cases
    add_case(["creation", "loop", "conditional"],
             "Retrieve all sprints from Jira and for each sprint retrieve the "
             "issues from Jira that match a filter; if any are left create a new "
             "message in Slack",
             "sprints = Jira_Sprint__2_0_0__retrieve_Sprint()\n"
             "for sprint in sprints:\n"
             "  issues = Jira_Issue__2_0_0__retrievewithwhere_Issue()\n"
             "  if len(issues) > 0:\n"
             "    message = Slack_Message__1_2_0__create_Message()")
    add_case(["creation", "linear"],
             "Retrieve all drafts from Gmail, update an existing draft in Gmail, "
             "and create a new label in Gmail",
             linear(("drafts", act("Gmail", "Draft", "retrieve")),
                    ("draft", act("Gmail", "Draft", "update")),
                    ("label", act("Gmail", "Label", "create"))))

    # -- update cases --------------------------------------------------------
    # add: prior linear, expected appends one call
    add_specs = [
        (("Jira", "Issue", "retrievewithwhere"), ("Slack", "Message", "create"),
         "Also post a message to the channel afterwards",
         "After pulling the matching Jira issues, also create a new message in Slack"),
        (("Salesforce", "Lead", "create"), ("Gmail", "Email", "create"),
         "Follow it up with an email",
         "After the lead is created, also create a new email in Gmail"),
        (("Zendesk", "Ticket", "create"), ("Twilio", "Sms", "create"),
         "And text the requester too",
         "Once the ticket exists also create a new sms in Twilio"),
        (("Stripe", "Customer", "create"), ("Stripe", "Invoice", "create"),
         "Bill them right away as well",
         "After creating the customer also create a new invoice in Stripe"),
        (("Trello", "Card", "create"), ("Slack", "Reminder", "create"),
         "Add a reminder for it",
         "When the card is made also create a new reminder in Slack"),
        (("Shopify", "Product", "create"), ("Shopify", "Discount", "create"),
         "Launch it with a promo",
         "After the product also create a new discount in Shopify"),
        (("Asana", "Task", "create"), ("Asana", "Section", "update"),
         "Then refile the section",
         "After the task also update an existing section in Asana"),
        (("HubSpot", "Deal", "create"), ("HubSpot", "Company", "update"),
         "Sync the company record after",
         "After the deal also update an existing company in HubSpot"),
        (("ServiceNow", "Incident", "create"), ("ServiceNow", "Change", "create"),
         "Raise the change record too",
         "After the incident also create a new change in ServiceNow"),
        (("Gmail", "Email", "retrievewithwhere"), ("Gmail", "Label", "create"),
         "Tag the batch when done",
         "After retrieving the matching emails also create a new label in Gmail"),
    ]
    for i, ((c1, e1, o1), (c2, e2, o2), short_utt, long_utt) in enumerate(add_specs):
        prior = linear((var(e1, o1.startswith("retrieve")), act(c1, e1, o1)))
        expected = prior + "\n" + linear((var(e2), act(c2, e2, o2)))
        utt = long_utt if i % 2 == 0 else short_utt
        add_case(["add", "linear"], utt, expected, prior=prior)

    # add a user task in front
    for conn, ent, op, task, utt in [
        ("Stripe", "Refund", "create", "approve the refund",
         "Before the refund goes out someone must approve the refund"),
        ("Salesforce", "Opportunity", "update", "verify the amounts",
         "Have a person verify the amounts before the update"),
        ("GitHub", "Branch", "delete", "confirm the branch is merged",
         "First confirm the branch is merged, then delete it"),
    ]:
        prior = linear((var(ent), act(conn, ent, op)))
        expected = f"user_task(\"{task}\")\n" + prior
        add_case(["add", "user_task"], utt, expected, prior=prior)

    # delete: prior has 3 statements, expected drops the middle one
    delete_specs = [
        (("Jira", "Issue", "retrieve"), ("Slack", "Message", "create"), ("Gmail", "Email", "create"),
         "Drop the Slack step, the email is enough"),
        (("Shopify", "Order", "retrieve"), ("Stripe", "Charge", "create"), ("Gmail", "Email", "create"),
         "Stop charging immediately, just send the email"),
        (("Zendesk", "Ticket", "retrievewithwhere"), ("Twilio", "Sms", "create"), ("Zendesk", "Ticket", "update"),
         "No more texts, only update the ticket"),
        (("Salesforce", "Lead", "retrievewithwhere"), ("HubSpot", "Company", "create"), ("Salesforce", "Lead", "update"),
         "Skip the HubSpot duplication step"),
        (("Dropbox", "Folder", "retrieve"), ("Dropbox", "File", "delete"), ("Slack", "Message", "create"),
         "Keep the files, just announce the folder listing"),
        (("Trello", "Board", "retrieve"), ("Trello", "Checklist", "create"), ("Slack", "Message", "create"),
         "Leave the checklists out of it"),
        (("Workday", "Worker", "retrieve"), ("Workday", "Timeoff", "create"), ("Gmail", "Email", "create"),
         "Remove the automatic leave booking"),
        (("GitHub", "Repository", "retrieve"), ("GitHub", "Issue", "create"), ("Slack", "Message", "create"),
         "Quit opening issues for these"),
    ]
    for (c1, e1, o1), (c2, e2, o2), (c3, e3, o3), utt in delete_specs:
        s1 = (var(e1, True), act(c1, e1, o1))
        s2 = (var(e2), act(c2, e2, o2))
        s3 = (var(e3), act(c3, e3, o3))
        add_case(["delete", "linear"], utt, linear(s1, s3), prior=linear(s1, s2, s3))

    # delete a user task
    for conn, ent, op, task, utt in [
        ("Stripe", "Invoice", "create", "double-check the invoice totals",
         "The manual double-check is no longer needed"),
        ("Jira", "Project", "create", "assign a project lead",
         "Stop asking for a project lead"),
    ]:
        base = linear((var(ent), act(conn, ent, op)))
        prior = base + f"\nuser_task(\"{task}\")"
        add_case(["delete", "user_task"], utt, base, prior=prior)

    # replace: one callee swapped
    replace_specs = [
        (("Gmail", "Email", "create"), ("Slack", "Message", "create"),
         "Use Slack instead of email for the notification",
         ("Zendesk", "Ticket", "retrievewithwhere")),
        (("Slack", "Message", "create"), ("Twilio", "Sms", "create"),
         "Make that a text message rather than a Slack post",
         ("ServiceNow", "Incident", "retrievewithwhere")),
        (("Stripe", "Charge", "create"), ("Stripe", "Invoice", "create"),
         "Invoice them instead of charging the card",
         ("Shopify", "Order", "retrievewithwhere")),
        (("Trello", "Card", "create"), ("Asana", "Task", "create"),
         "Track it in Asana now, not Trello",
         ("Gmail", "Email", "retrievewithwhere")),
        (("Salesforce", "Lead", "update"), ("Salesforce", "Lead", "delete"),
         "Purge the stale leads instead of updating them",
         ("Salesforce", "Lead", "retrievewithwhere")),
        (("GitHub", "Issue", "update"), ("GitHub", "Issue", "create"),
         "Open fresh issues rather than editing the old ones",
         ("GitHub", "Repository", "retrievewithwhere")),
        (("Workday", "Timeoff", "create"), ("Workday", "Timeoff", "delete"),
         "Cancel the leave instead of booking it",
         ("Workday", "Worker", "retrievewithwhere")),
        (("HubSpot", "Deal", "update"), ("HubSpot", "Deal", "delete"),
         "Retire those deals entirely",
         ("HubSpot", "Company", "retrievewithwhere")),
    ]
    for (c_old, e_old, o_old), (c_new, e_new, o_new), utt, (c1, e1, o1) in replace_specs:
        head = (var(e1, True), act(c1, e1, o1))
        prior = linear(head, (var(e_old), act(c_old, e_old, o_old)))
        expected = linear(head, (var(e_new), act(c_new, e_new, o_new)))
        add_case(["replace", "linear"], utt, expected, prior=prior)

    # replace inside a loop body (uid-97 shaped)
    loop_replace = [
        (("Jira", "Sprint", "retrieve"), ("Jira", "Issue", "retrievewithwhere"),
         ("Jira", "Issue", "create"),
         "For each sprint create a new issue instead of querying them"),
        (("Salesforce", "Account", "retrieve"), ("Gmail", "Email", "create"),
         ("Twilio", "Sms", "create"),
         "Per account, text instead of emailing"),
        (("Shopify", "Order", "retrieve"), ("Stripe", "Invoice", "create"),
         ("Stripe", "Refund", "create"),
         "For every order issue a refund rather than an invoice"),
        (("Zendesk", "Organization", "retrieve"), ("Zendesk", "Ticket", "update"),
         ("Zendesk", "Ticket", "create"),
         "Open new tickets per organization instead of updating"),
    ]
    for (c1, e1, o1), (c_old, e_old, o_old), (c_new, e_new, o_new), utt in loop_replace:
        it = var(e1, True)
        prior = (f"{it} = {act(c1, e1, o1)}()\n"
                 f"for {var(e1)} in {it}:\n"
                 f"  {var(e_old)} = {act(c_old, e_old, o_old)}()")
        expected = (f"{it} = {act(c1, e1, o1)}()\n"
                    f"for {var(e1)} in {it}:\n"
                    f"  {var(e_new)} = {act(c_new, e_new, o_new)}()")
        add_case(["replace", "loop"], utt, expected, prior=prior)

    # add inside a conditional branch
    cond_update = [
        (("Stripe", "Invoice", "retrievewithwhere"), "len(invoices) > 0",
         ("Slack", "Message", "create"), ("Gmail", "Email", "create"),
         "When invoices are found, email as well as posting to Slack"),
        (("GitHub", "PullRequest", "retrievewithwhere"), "len(pullrequests) > 3",
         ("Slack", "Message", "create"), ("Slack", "Reminder", "create"),
         "If the review queue is long also create a new reminder in Slack"),
        (("Salesforce", "Opportunity", "retrievewithwhere"), "len(opportunitys) == 0",
         ("Salesforce", "Lead", "create"), ("Gmail", "Email", "create"),
         "When nothing is in flight, send the recap email after creating the lead"),
    ]
    for (c1, e1, o1), cond, (c2, e2, o2), (c3, e3, o3), utt in cond_update:
        head = (f"{var(e1, True)} = {act(c1, e1, o1)}()\n"
                f"if {cond}:\n"
                f"  {var(e2)} = {act(c2, e2, o2)}()")
        prior = head
        expected = head + f"\n  {var(e3)} = {act(c3, e3, o3)}()"
        add_case(["add", "conditional"], utt, expected, prior=prior)

    # wrap an existing step in a loop
    wrap_specs = [
        (("Zendesk", "Organization", "retrieve"), ("Zendesk", "Ticket", "create"),
         "Do the ticket creation once per organization"),
        (("GitHub", "Repository", "retrieve"), ("GitHub", "Issue", "create"),
         "Repeat the issue creation for every repository"),
        (("HubSpot", "Company", "retrieve"), ("HubSpot", "Deal", "create"),
         "Open that deal for each company we have"),
    ]
    for (c1, e1, o1), (c2, e2, o2), utt in wrap_specs:
        it = var(e1, True)
        prior = (f"{it} = {act(c1, e1, o1)}()\n"
                 f"{var(e2)} = {act(c2, e2, o2)}()")
        expected = (f"{it} = {act(c1, e1, o1)}()\n"
                    f"for {var(e1)} in {it}:\n"
                    f"  {var(e2)} = {act(c2, e2, o2)}()")
        add_case(["add", "loop"], utt, expected, prior=prior)

    # change a condition
    cond_change = [
        (("Zendesk", "Ticket", "retrievewithwhere"),
         "len(tickets) > 10", "len(tickets) > 25",
         ("Slack", "Message", "create"),
         "Only escalate once more than twenty five tickets pile up"),
        (("Shopify", "Product", "retrievewithwhere"),
         "len(products) < 5", "len(products) < 2",
         ("Shopify", "Product", "create"),
         "Restock only when almost everything is gone"),
    ]
    for (c1, e1, o1), old_cond, new_cond, (c2, e2, o2), utt in cond_change:
        mk = lambda cond: (f"{var(e1, True)} = {act(c1, e1, o1)}()\n"
                           f"if {cond}:\n"
                           f"  {var(e2)} = {act(c2, e2, o2)}()")
        add_case(["replace", "conditional"], utt, mk(new_cond), prior=mk(old_cond))

    # add an else branch
    else_specs = [
        (("Salesforce", "Account", "retrievewithwhere"), "len(accounts) == 0",
         ("Salesforce", "Account", "create"), ("Salesforce", "Account", "update"),
         "If accounts already exist update one instead"),
        (("Stripe", "Customer", "retrievewithwhere"), "customers is None",
         ("Stripe", "Customer", "create"), ("Stripe", "Customer", "update"),
         "Otherwise refresh the existing customer record"),
    ]
    for (c1, e1, o1), cond, (c2, e2, o2), (c3, e3, o3), utt in else_specs:
        head = (f"{var(e1, True)} = {act(c1, e1, o1)}()\n"
                f"if {cond}:\n"
                f"  {var(e2)} = {act(c2, e2, o2)}()")
        prior = head
        expected = head + f"\nelse:\n  {var(e3)} = {act(c3, e3, o3)}()"
        add_case(["add", "conditional"], utt, expected, prior=prior)

    # extend loop bodies
    loop_add = [
        (("Jira", "Issue", "retrieve"), ("Slack", "Message", "create"),
         ("Jira", "Issue", "update"),
         "Also update each issue after posting about it"),
        (("Salesforce", "Lead", "retrievewithwhere"), ("Gmail", "Email", "create"),
         ("Salesforce", "Lead", "update"),
         "Mark every lead as contacted after the email"),
        (("Dropbox", "Folder", "retrieve"), ("Dropbox", "File", "delete"),
         ("Slack", "Message", "create"),
         "Report each folder cleanup in Slack"),
    ]
    for (c1, e1, o1), (c2, e2, o2), (c3, e3, o3), utt in loop_add:
        it = var(e1, True)
        head = (f"{it} = {act(c1, e1, o1)}()\n"
                f"for {var(e1)} in {it}:\n"
                f"  {var(e2)} = {act(c2, e2, o2)}()")
        expected = head + f"\n  {var(e3)} = {act(c3, e3, o3)}()"
        add_case(["add", "loop"], utt, expected, prior=head)

    # delete from loop body / delete whole loop
    add_case(["delete", "loop"],
             "Per issue, keep the Slack post but stop editing the issue",
             "issues = Jira_Issue__2_0_0__retrieve_Issue()\n"
             "for issue in issues:\n"
             "  message = Slack_Message__1_2_0__create_Message()",
             prior="issues = Jira_Issue__2_0_0__retrieve_Issue()\n"
             "for issue in issues:\n"
             "  message = Slack_Message__1_2_0__create_Message()\n"
             "  issue2 = Jira_Issue__2_0_0__update_Issue()")
    add_case(["delete", "loop"],
             "Forget the per-repository sweep entirely, just list them",
             "repositorys = GitHub_Repository__3_0_0__retrieve_Repository()",
             prior="repositorys = GitHub_Repository__3_0_0__retrieve_Repository()\n"
             "for repository in repositorys:\n"
             "  branch = GitHub_Branch__3_0_0__delete_Branch()")

    # replace a user task with an automated step and vice versa
    add_case(["replace", "user_task"],
             "Automate the triage with a ticket update instead of a person",
             "tickets = Zendesk_Ticket__2_1_0__retrievewithwhere_Ticket()\n"
             "ticket = Zendesk_Ticket__2_1_0__update_Ticket()",
             prior="tickets = Zendesk_Ticket__2_1_0__retrievewithwhere_Ticket()\n"
             "user_task(\"triage the matching tickets\")")
    add_case(["replace", "user_task"],
             "A human should vet the refund, drop the automatic approval step",
             "refund = Stripe_Refund__2_0_0__create_Refund()\n"
             "user_task(\"vet the refund manually\")",
             prior="refund = Stripe_Refund__2_0_0__create_Refund()\n"
             "charge = Stripe_Charge__2_0_0__retrievewithwhere_Charge()")

    # a few multi-edit updates
    add_case(["add", "replace", "linear"],
             "Swap the email for a Slack message and log a Trello card at the end",
             "tickets = Zendesk_Ticket__2_1_0__retrieve_Ticket()\n"
             "message = Slack_Message__1_2_0__create_Message()\n"
             "card = Trello_Card__1_0_0__create_Card()",
             prior="tickets = Zendesk_Ticket__2_1_0__retrieve_Ticket()\n"
             "email = Gmail_Email__1_0_0__create_Email()")
    add_case(["add", "delete", "linear"],
             "Replace the whole tail: no more invoice, just update the order and notify",
             "orders = Shopify_Order__3_0_0__retrievewithwhere_Order()\n"
             "order = Shopify_Order__3_0_0__update_Order()\n"
             "sms = Twilio_Sms__1_0_0__create_Sms()",
             prior="orders = Shopify_Order__3_0_0__retrievewithwhere_Order()\n"
             "invoice = Stripe_Invoice__2_0_0__create_Invoice()")

    # no-op style minimal updates (replace within same connector)
    for (conn, ent), (o_old, o_new), utt in [
        (("Gmail", "Draft"), ("update", "delete"),
         "Discard those drafts instead of editing them"),
        (("Trello", "Checklist"), ("create", "update"),
         "Amend the existing checklist rather than adding another"),
        (("ServiceNow", "Change"), ("create", "update"),
         "Update the open change instead of filing a new one"),
    ]:
        prior = linear((var(ent), act(conn, ent, o_old)))
        expected = linear((var(ent), act(conn, ent, o_new)))
        add_case(["replace", "linear"], utt, expected, prior=prior)

    # pad with paraphrased variants of earlier shapes until we reach 101
    fillers = [
        (("Twilio", "Call", "create"), ("ServiceNow", "Incident", "create"),
         "Create a new call in Twilio and create a new incident in ServiceNow"),
        (("Asana", "Section", "create"), ("Asana", "Task", "create"),
         "Create a new section in Asana then create a new task in Asana"),
        (("Stripe", "Customer", "create"), ("HubSpot", "Company", "create"),
         "Create a new customer in Stripe and mirror it as a new company in HubSpot"),
        (("Gmail", "Email", "retrievewithwhere"), ("Zendesk", "Ticket", "create"),
         "Retrieve the emails from Gmail that match a filter and create a new ticket in Zendesk"),
        (("Jira", "Sprint", "retrieve"), ("Slack", "Message", "create"),
         "Retrieve all sprints from Jira and create a new message in Slack"),
        (("Salesforce", "Contact", "retrievewithwhere"), ("Gmail", "Email", "create"),
         "Retrieve the contacts from Salesforce that match a filter and create a new email in Gmail"),
        (("Shopify", "Discount", "retrieve"), ("Shopify", "Discount", "delete"),
         "Sweep the expired promos out"),
        (("Trello", "Card", "retrievewithwhere"), ("Trello", "Card", "update"),
         "Retrieve the cards from Trello that match a filter and update an existing card in Trello"),
        (("GitHub", "Issue", "retrievewithwhere"), ("GitHub", "Issue", "update"),
         "Retrieve the issues from GitHub that match a filter and update an existing issue in GitHub"),
        (("Workday", "Timeoff", "retrieve"), ("Gmail", "Email", "create"),
         "Summarize everyone's leave in an email"),
        (("ServiceNow", "Incident", "retrievewithwhere"), ("Slack", "Message", "create"),
         "Retrieve the incidents from ServiceNow that match a filter and create a new message in Slack"),
        (("Dropbox", "File", "retrievewithwhere"), ("Dropbox", "File", "delete"),
         "Retrieve the files from Dropbox that match a filter and delete a file from Dropbox"),
        (("HubSpot", "Company", "create"), ("Salesforce", "Account", "create"),
         "Create a new company in HubSpot and a new account in Salesforce"),
        (("Zendesk", "Ticket", "retrieve"), ("Gmail", "Email", "create"),
         "Retrieve all tickets from Zendesk and create a new email in Gmail"),
        (("Stripe", "Charge", "retrievewithwhere"), ("Stripe", "Refund", "create"),
         "Retrieve the charges from Stripe that match a filter and create a new refund in Stripe"),
    ]
    for (c1, e1, o1), (c2, e2, o2), utt in fillers:
        if len(CASES) >= 101:
            break
        seq = linear((var(e1, o1.startswith("retrieve")), act(c1, e1, o1)),
                     (var(e2), act(c2, e2, o2)))
        add_case(["creation", "linear"], utt, seq)

    assert len(CASES) == 101, len(CASES)


# ---------------------------------------------------------------------------
# recall calibration check (mirror of the C++ retriever)


def levenshtein(a, b):
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def norm_dist(a, b):
    if not a and not b:
        return 0.0
    return levenshtein(a.lower(), b.lower()) / max(len(a), len(b))


def activities_of(seq):
    out = []
    for line in seq.splitlines():
        line = line.strip()
        if "=" in line:
            callee = line.split("=", 1)[1].strip().rstrip("()")
        elif line.endswith("()"):
            callee = line[:-2]
        else:
            continue
        if callee and not callee.startswith("user_task") and "__" in callee:
            out.append(callee)
    return out


def recall_at(catalog, k):
    total = 0.0
    for case in CASES:
        gold = set(activities_of(case["expected"]))
        if not gold:
            total += 1.0
            continue
        ranked = sorted(range(len(catalog)),
                        key=lambda i: norm_dist(case["utterance"],
                                                catalog[i]["description"]))
        chosen = []
        if case["prior"]:
            for a in activities_of(case["prior"]):
                if a not in chosen and any(c["id"] == a for c in catalog):
                    chosen.append(a)
        for i in ranked:
            if len(chosen) >= k:
                break
            if catalog[i]["id"] not in chosen:
                chosen.append(catalog[i]["id"])
        chosen = chosen[:k]
        total += len(gold & set(chosen)) / len(gold)
    return total / len(CASES)


# ---------------------------------------------------------------------------
# emission


def yaml_block(text, indent):
    pad = " " * indent
    lines = text.split("\n")
    return "\n".join(pad + line if line else pad for line in lines)


def case_yaml(case, uid):
    tags = "\n".join(f"    - {t}" for t in case["tags"])
    out = [
        "_metadata:",
        "  tags:",
        tags,
        f"  uid: {uid}",
        "input:",
        "  utterance: |-",
        yaml_block(case["utterance"], 4),
    ]
    if case["prior"]:
        out += [
            "  prior_sequence:",
            "    - |-",
            yaml_block(case["prior"], 6),
            "  prior_context: []",
            "  bpmn:",
            f"    $ref: \"context/uid_{uid}_context.bpmn\"",
        ]
    out += [
        "expected_output:",
        "  sequence:",
        "    - |-",
        yaml_block(case["expected"], 6),
        "  bpmn:",
        f"    $ref: \"output/uid_{uid}_output.bpmn\"",
    ]
    return "\n".join(out) + "\n"


def compile_bpmn(flowgen_bin, seq, out_path):
    proc = subprocess.run([flowgen_bin, "compile", "-", "-o", out_path],
                          input=seq.encode(), capture_output=True)
    if proc.returncode != 0:
        raise SystemExit(f"compile failed for {out_path}:\n{seq}\n"
                         f"{proc.stderr.decode()}")


def main():
    if len(sys.argv) != 2:
        raise SystemExit("usage: make_dataset.py <flowgen-binary>")
    flowgen_bin = sys.argv[1]

    rng = random.Random(20240817)
    make_cases(rng)
    catalog = build_catalog()
    ids = {c["id"] for c in catalog}
    for case in CASES:
        for a in activities_of(case["expected"]) + activities_of(case["prior"] or ""):
            assert a in ids, f"activity {a} missing from catalog"

    # move the worked example to uid 97; everything else gets stable uids
    uids = [u for u in range(1, 102) if u != 97]
    ordered = [(97, CASES[0])] + list(zip(uids, CASES[1:]))

    os.makedirs(os.path.join(BENCH, "context"), exist_ok=True)
    os.makedirs(os.path.join(BENCH, "output"), exist_ok=True)

    with open(os.path.join(DATA, "catalog.json"), "w") as f:
        json.dump(catalog, f, indent=2)
        f.write("\n")

    for uid, case in ordered:
        with open(os.path.join(BENCH, f"uid_{uid}.yaml"), "w") as f:
            f.write(case_yaml(case, uid))
        compile_bpmn(flowgen_bin, case["expected"] + "\n",
                     os.path.join(BENCH, "output", f"uid_{uid}_output.bpmn"))
        if case["prior"]:
            compile_bpmn(flowgen_bin, case["prior"] + "\n",
                         os.path.join(BENCH, "context",
                                      f"uid_{uid}_context.bpmn"))

    n_update = sum(1 for c in CASES if c["prior"])
    print(f"catalog: {len(catalog)} activities")
    print(f"cases: {len(CASES)} ({n_update} update, {len(CASES)-n_update} initial)")
    for k in (10, 50, 100):
        print(f"ED recall@{k}: {recall_at(catalog, k):.4f}")


if __name__ == "__main__":
    main()
